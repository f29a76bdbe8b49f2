"""MiniCatch: catch falling balls with a paddle.

Deliberately Atari-flavored screen furniture (gray border, colored score
strip) so the segmentation stage sees more than just the two gameplay
objects.  All positions are integers and all motion is fixed-step, so a
(seed, action sequence) pair replays bit-identically anywhere.

Geometry
    screen 210 rows x 160 cols, playfield full width
    paddle 16x4 px, rows 200..203, x in [0,144], moves +-2 per frame
    ball 4x4 px, falls 2 px per frame, spawn columns are multiples of 4
    ball resolves when its bottom edge reaches the paddle band top (row 200)

Actions: 0 NOOP, 1 LEFT, 2 RIGHT.  Reward +1 on catch, -1 on miss.
Episode ends after 10 resolved balls, so returns lie in {-10, -8, ..., +10}.

With `balls` > 1 the spawns are staggered 24 px apart vertically; for up to
8 balls the resolution phases (12*i mod 98) are all distinct, so at most one
ball resolves per frame.
"""

from __future__ import annotations

from .base import Env, EpisodeOver, StepResult, blank_frame
from .rng import SplitMix64

PADDLE_W = 16
PADDLE_Y = 200
PADDLE_MAX_X = 144
BALL_W = 4
BALL_COLUMNS = 40  # spawn x = 4 * randrange(40), so x in [0, 156]
FALL_SPEED = 2
PADDLE_SPEED = 2
BALLS_PER_EPISODE = 10
STAGGER = 24

COLOR_BG = (0, 0, 0)
COLOR_BORDER = (128, 128, 128)
COLOR_SPRITE = (255, 255, 255)
COLOR_PENDING = (64, 64, 64)
COLOR_CAUGHT = (0, 208, 0)
COLOR_MISSED = (208, 0, 0)


class MiniCatch(Env):
    action_count = 3

    def __init__(self, balls: int = 1, rng_factory=None):
        if not 1 <= balls <= 8:
            raise ValueError("MiniCatch supports 1..8 simultaneous balls")
        self.balls_per_screen = balls
        self.env_id = "MiniCatch-v0" if balls == 1 else f"MiniCatch{balls}-v0"
        self.object_count = "low" if balls <= 2 else "high"
        # rng_factory(seed) lets tests force spawn columns with a stub
        self._rng_factory = rng_factory if rng_factory is not None else SplitMix64
        self._state = None

    def reset(self, seed: int):
        rng = self._rng_factory(seed)
        balls = [
            [rng.randrange(BALL_COLUMNS) * BALL_W, -STAGGER * i]
            for i in range(self.balls_per_screen)
        ]
        self._state = {
            "paddle_x": 72,  # centered: (160 - 16) / 2
            "balls": balls,
            "resolved": 0,
            "outcomes": [],
            "rng": rng,
            "terminated": False,
        }
        return self._render()

    def step(self, action: int) -> StepResult:
        s = self._state
        if s is None:
            raise EpisodeOver("step before reset")
        if s["terminated"]:
            raise EpisodeOver("episode already terminated, call reset")
        if not 0 <= action < self.action_count:
            raise ValueError(f"action {action} outside [0, {self.action_count})")

        if action == 1:
            s["paddle_x"] = max(0, s["paddle_x"] - PADDLE_SPEED)
        elif action == 2:
            s["paddle_x"] = min(PADDLE_MAX_X, s["paddle_x"] + PADDLE_SPEED)

        reward = 0.0
        for ball in s["balls"]:
            ball[1] += FALL_SPEED
            if ball[1] + BALL_W >= PADDLE_Y and not s["terminated"]:
                px = s["paddle_x"]
                caught = ball[0] + BALL_W > px and px + PADDLE_W > ball[0]
                reward += 1.0 if caught else -1.0
                s["outcomes"].append(caught)
                s["resolved"] += 1
                if s["resolved"] >= BALLS_PER_EPISODE:
                    s["terminated"] = True
                ball[0] = s["rng"].randrange(BALL_COLUMNS) * BALL_W
                ball[1] = 0

        return StepResult(self._render(), reward, s["terminated"], False)

    def _render(self):
        s = self._state
        f = blank_frame()
        f[0:2, :] = COLOR_BORDER
        f[208:210, :] = COLOR_BORDER
        f[:, 0:2] = COLOR_BORDER
        f[:, 158:160] = COLOR_BORDER
        # score strip: one block per ball of the episode, recolored on resolve
        for i in range(BALLS_PER_EPISODE):
            if i < len(s["outcomes"]):
                color = COLOR_CAUGHT if s["outcomes"][i] else COLOR_MISSED
            else:
                color = COLOR_PENDING
            x = 4 + 15 * i
            f[4:12, x : x + 12] = color
        px = s["paddle_x"]
        f[PADDLE_Y : PADDLE_Y + 4, px : px + PADDLE_W] = COLOR_SPRITE
        for bx, by in s["balls"]:
            top = max(by, 0)
            if by + BALL_W > 0:
                f[top : by + BALL_W, bx : bx + BALL_W] = COLOR_SPRITE
        return f
