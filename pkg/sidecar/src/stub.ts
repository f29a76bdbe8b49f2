/**
 * Model-free stand-in segmenter: color quantization plus 4-connected
 * component labeling plus small-segment suppression.
 *
 * This reimplements the primary trainer's builtin segmenter exactly
 * (quantize bits=3, 4-connected labeling in first-encounter order,
 * min-area 4), so responses from a stub-model sidecar are byte-identical
 * to what the trainer computes in-process.  Keep the arithmetic in sync;
 * the conformance suite compares outputs bit for bit.
 */

import { Frame, LabelMap } from "./proto";
import { Mask, SegModel } from "./model";

/** Snap every channel value to the midpoint of its 2^bits bucket. */
export function quantize(pixels: Uint8Array, bits: number): Uint8Array {
  if (bits < 1 || bits > 8) {
    throw new Error(`bits must be in [1, 8], got ${bits}`);
  }
  const size = 256 >> bits;
  const half = (size - 1) >> 1;
  const out = new Uint8Array(pixels.length);
  for (let i = 0; i < pixels.length; i++) {
    out[i] = ((pixels[i] / size) | 0) * size + half;
  }
  return out;
}

class DisjointSet {
  parent: Int32Array;
  size: Int32Array;

  constructor(n: number) {
    this.parent = new Int32Array(n);
    for (let i = 0; i < n; i++) this.parent[i] = i;
    this.size = new Int32Array(n).fill(1);
  }

  find(x: number): number {
    let root = x;
    while (this.parent[root] !== root) root = this.parent[root];
    while (this.parent[x] !== root) {
      const next = this.parent[x];
      this.parent[x] = root;
      x = next;
    }
    return root;
  }

  union(a: number, b: number): void {
    let ra = this.find(a);
    let rb = this.find(b);
    if (ra === rb) return;
    if (this.size[ra] < this.size[rb]) {
      const t = ra;
      ra = rb;
      rb = t;
    }
    this.parent[rb] = ra;
    this.size[ra] += this.size[rb];
  }
}

/**
 * 4-connected components of equal color, labeled 1..N in first-encounter
 * order when scanning pixels row-major.
 */
export function labelComponents(quantized: Uint8Array, width: number, height: number): LabelMap {
  if (quantized.length !== 3 * width * height) {
    throw new Error(
      `pixel buffer is ${quantized.length} bytes, expected ${3 * width * height}`
    );
  }
  const n = width * height;
  const dsu = new DisjointSet(n);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = y * width + x;
      const p = 3 * i;
      if (x > 0) {
        const q = p - 3;
        if (
          quantized[p] === quantized[q] &&
          quantized[p + 1] === quantized[q + 1] &&
          quantized[p + 2] === quantized[q + 2]
        ) {
          dsu.union(i - 1, i);
        }
      }
      if (y > 0) {
        const q = p - 3 * width;
        if (
          quantized[p] === quantized[q] &&
          quantized[p + 1] === quantized[q + 1] &&
          quantized[p + 2] === quantized[q + 2]
        ) {
          dsu.union(i - width, i);
        }
      }
    }
  }

  const labels = new Int32Array(n);
  const labelOfRoot = new Map<number, number>();
  let next = 1;
  for (let i = 0; i < n; i++) {
    const root = dsu.find(i);
    let lab = labelOfRoot.get(root);
    if (lab === undefined) {
      lab = next++;
      labelOfRoot.set(root, lab);
    }
    labels[i] = lab;
  }
  return { width, height, labels, count: next - 1 };
}

/** Relabel segments smaller than minArea to 0; re-densify the rest. */
export function suppressSmall(seg: LabelMap, minArea: number): LabelMap {
  if (minArea < 1) {
    throw new Error(`minArea must be >= 1, got ${minArea}`);
  }
  if (seg.count === 0 || minArea === 1) {
    return { ...seg, labels: seg.labels.slice() };
  }
  const areas = new Int32Array(seg.count + 1);
  for (let i = 0; i < seg.labels.length; i++) areas[seg.labels[i]]++;
  const remap = new Int32Array(seg.count + 1);
  let kept = 0;
  for (let lab = 1; lab <= seg.count; lab++) {
    if (areas[lab] >= minArea) remap[lab] = ++kept;
  }
  const labels = new Int32Array(seg.labels.length);
  for (let i = 0; i < seg.labels.length; i++) labels[i] = remap[seg.labels[i]];
  return { width: seg.width, height: seg.height, labels, count: kept };
}

export function stubSegment(frame: Frame, bits = 3, minArea = 4): LabelMap {
  const q = quantize(frame.pixels, bits);
  return suppressSmall(labelComponents(q, frame.width, frame.height), minArea);
}

/**
 * The stub as a pluggable model: one binary mask per segment.  Running
 * these through the generic mask compositor reproduces the label map
 * unchanged (segments are disjoint), so the stub exercises the same code
 * path an external model would.
 */
export function createStubModel(): SegModel {
  return {
    segment(frame: Frame): Mask[] {
      const seg = stubSegment(frame);
      const masks: Mask[] = [];
      for (let lab = 1; lab <= seg.count; lab++) {
        const pixels = new Uint8Array(seg.labels.length);
        for (let i = 0; i < seg.labels.length; i++) {
          if (seg.labels[i] === lab) pixels[i] = 1;
        }
        masks.push({ pixels });
      }
      return masks;
    },
  };
}
