"""MiniBricks: a Breakout-like wall-clearing game.

Secondary environment, not used by the acceptance experiments.  Integer
positions with axis-aligned reflection keep every trajectory exactly
reproducible.  Actions: 0 NOOP, 1 FIRE (launch ball), 2 LEFT, 3 RIGHT.
Reward +1 per brick.  Three lives; episode ends when the last life is lost
or the wall is cleared.
"""

from __future__ import annotations

from .base import Env, EpisodeOver, StepResult, blank_frame
from .rng import SplitMix64

BRICK_ROWS = 3
BRICKS_PER_ROW = 10
BRICK_W = 16
BRICK_H = 8
BRICK_TOP = 60
ROW_COLORS = ((200, 72, 72), (200, 140, 0), (60, 140, 200))
PADDLE_W = 16
PADDLE_Y = 200
TOP_BOUND = 12
BALL_W = 4


class MiniBricks(Env):
    env_id = "MiniBricks-v0"
    action_count = 4
    object_count = "high"

    def __init__(self, rng_factory=None):
        self._rng_factory = rng_factory if rng_factory is not None else SplitMix64
        self._state = None

    def reset(self, seed: int):
        self._state = {
            "paddle_x": 72,
            "bricks": [[True] * BRICKS_PER_ROW for _ in range(BRICK_ROWS)],
            "lives": 3,
            "in_play": False,
            "ball": [0, 0, 2, -2],  # x, y, vx, vy
            "rng": self._rng_factory(seed),
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

        if action == 2:
            s["paddle_x"] = max(0, s["paddle_x"] - 2)
        elif action == 3:
            s["paddle_x"] = min(160 - PADDLE_W, s["paddle_x"] + 2)

        reward = 0.0
        if not s["in_play"]:
            if action == 1:
                vx = 2 if s["rng"].randrange(2) == 0 else -2
                s["ball"] = [s["paddle_x"] + 6, PADDLE_Y - BALL_W, vx, -2]
                s["in_play"] = True
        else:
            b = s["ball"]
            b[0] += b[2]
            b[1] += b[3]
            if b[0] <= 0:
                b[0], b[2] = 0, 2
            elif b[0] >= 160 - BALL_W:
                b[0], b[2] = 160 - BALL_W, -2
            if b[1] <= TOP_BOUND:
                b[1], b[3] = TOP_BOUND, 2
            reward += self._hit_brick(b)
            px = s["paddle_x"]
            if b[3] > 0 and b[1] + BALL_W >= PADDLE_Y:
                if b[0] + BALL_W > px and px + PADDLE_W > b[0]:
                    b[1], b[3] = PADDLE_Y - BALL_W, -2
                elif b[1] >= PADDLE_Y + 4:
                    s["lives"] -= 1
                    s["in_play"] = False
                    if s["lives"] == 0:
                        s["terminated"] = True
        if not any(any(row) for row in s["bricks"]):
            s["terminated"] = True

        return StepResult(self._render(), reward, s["terminated"], False)

    def _hit_brick(self, b) -> float:
        s = self._state
        for r in range(BRICK_ROWS):
            top = BRICK_TOP + r * BRICK_H
            if b[1] + BALL_W <= top or b[1] >= top + BRICK_H:
                continue
            for c in range(BRICKS_PER_ROW):
                if not s["bricks"][r][c]:
                    continue
                left = c * BRICK_W
                if b[0] + BALL_W > left and left + BRICK_W > b[0]:
                    s["bricks"][r][c] = False
                    b[3] = -b[3]
                    return 1.0
        return 0.0

    def _render(self):
        s = self._state
        f = blank_frame()
        f[0:2, :] = (128, 128, 128)
        f[208:210, :] = (128, 128, 128)
        f[:, 0:2] = (128, 128, 128)
        f[:, 158:160] = (128, 128, 128)
        for r in range(BRICK_ROWS):
            top = BRICK_TOP + r * BRICK_H
            for c in range(BRICKS_PER_ROW):
                if s["bricks"][r][c]:
                    f[top : top + BRICK_H, c * BRICK_W : (c + 1) * BRICK_W] = ROW_COLORS[r]
        px = s["paddle_x"]
        f[PADDLE_Y : PADDLE_Y + 4, px : px + PADDLE_W] = (255, 255, 255)
        if s["in_play"]:
            bx, by = s["ball"][0], s["ball"][1]
        else:
            bx, by = px + 6, PADDLE_Y - BALL_W
        f[by : by + BALL_W, bx : bx + BALL_W] = (255, 255, 255)
        return f
