/**
 * Pluggable segmentation model slot.
 *
 * A model turns an RGB frame into binary masks; the server composites
 * the masks into the dense label map the wire format carries.  The
 * bundled stub needs no assets; the external slot loads a node module
 * by path and passes its options string through uninterpreted.
 */

import { Frame, LabelMap } from "./proto";

export interface Mask {
  /** One byte per pixel, row-major; nonzero = member. */
  pixels: Uint8Array;
}

export interface SegModel {
  segment(frame: Frame): Mask[];
}

/**
 * Composite overlapping masks into a dense label map.
 *
 * Masks are sorted by area descending and painted in that order, so a
 * later (smaller) mask overwrites earlier ones where they overlap and
 * fine structure survives on top of coarse regions.  Unassigned pixels
 * stay 0.  Surviving regions are renumbered 1..count in row-major
 * first-encounter order, which keeps the output canonical regardless of
 * the order the model emitted its masks.
 */
export function compositeMasks(masks: Mask[], width: number, height: number): LabelMap {
  const n = width * height;
  const painted = new Int32Array(n);
  const order = masks
    .map((mask, i) => {
      let area = 0;
      if (mask.pixels.length !== n) {
        throw new Error(`mask ${i} has ${mask.pixels.length} pixels, expected ${n}`);
      }
      for (let p = 0; p < n; p++) {
        if (mask.pixels[p] !== 0) area++;
      }
      return { i, area };
    })
    .sort((a, b) => b.area - a.area || a.i - b.i);
  for (let k = 0; k < order.length; k++) {
    const mask = masks[order[k].i];
    for (let p = 0; p < n; p++) {
      if (mask.pixels[p] !== 0) painted[p] = k + 1;
    }
  }

  const labels = new Int32Array(n);
  const renumber = new Map<number, number>();
  let next = 1;
  for (let p = 0; p < n; p++) {
    const id = painted[p];
    if (id === 0) continue;
    let lab = renumber.get(id);
    if (lab === undefined) {
      lab = next++;
      renumber.set(id, lab);
    }
    labels[p] = lab;
  }
  return { width, height, labels, count: next - 1 };
}

/**
 * Load an external model module.  The module must export
 * createModel(options?: string): SegModel; options arrive verbatim from
 * the command line and are not interpreted here.
 */
export function loadExternalModel(modulePath: string, options?: string): SegModel {
  // eslint-disable-next-line @typescript-eslint/no-var-requires
  const mod = require(modulePath);
  const factory = mod.createModel ?? mod.default?.createModel;
  if (typeof factory !== "function") {
    throw new Error(`${modulePath} does not export createModel(options)`);
  }
  const model = factory(options);
  if (typeof model?.segment !== "function") {
    throw new Error(`createModel from ${modulePath} did not return a model with segment()`);
  }
  return model as SegModel;
}
