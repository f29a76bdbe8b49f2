/**
 * SEG1 binary wire format.
 *
 * Request:  "SEG1" | width u32be | height u32be | RGB payload (3*w*h bytes)
 * Response: status u8 | segment count u32be | labels (w*h u32be, status 0 only)
 *
 * Status: 0 ok, 1 model error, 2 bad request.  Non-zero status responses
 * are exactly 5 bytes.  All integers are big-endian.  Label values must be
 * dense: every label in [1, count] occurs, nothing exceeds count.
 */

export const MAGIC = Buffer.from("SEG1", "ascii");
export const HEADER_SIZE = 12;
export const STATUS_OK = 0;
export const STATUS_MODEL_ERROR = 1;
export const STATUS_BAD_REQUEST = 2;

/** Malformed message; carries the byte offset where parsing failed. */
export class ProtocolError extends Error {
  constructor(public readonly offset: number, public readonly cause_: string) {
    super(`protocol error at byte ${offset}: ${cause_}`);
    this.name = "ProtocolError";
  }
}

/** Server answered with a non-zero status byte. */
export class ResponseStatusError extends Error {
  constructor(public readonly status: number) {
    const kind = status === STATUS_MODEL_ERROR ? "model error" : "bad request";
    super(`server returned status ${status} (${kind})`);
    this.name = "ResponseStatusError";
  }
}

export interface Frame {
  width: number;
  height: number;
  /** RGB bytes, row-major, 3 per pixel. */
  pixels: Uint8Array;
}

export interface LabelMap {
  width: number;
  height: number;
  /** Row-major labels, 0 = background. */
  labels: Int32Array;
  count: number;
}

export function encodeRequest(frame: Frame): Buffer {
  const { width, height, pixels } = frame;
  if (pixels.length !== 3 * width * height) {
    throw new Error(
      `payload is ${pixels.length} bytes, expected ${3 * width * height} for ${width}x${height}`
    );
  }
  const out = Buffer.allocUnsafe(HEADER_SIZE + pixels.length);
  MAGIC.copy(out, 0);
  out.writeUInt32BE(width, 4);
  out.writeUInt32BE(height, 8);
  out.set(pixels, HEADER_SIZE);
  return out;
}

/** Validate a 12-byte request header; returns [width, height, payload bytes]. */
export function requestFrameSize(header: Buffer): [number, number, number] {
  if (header.length !== HEADER_SIZE) {
    throw new ProtocolError(header.length, `header short by ${HEADER_SIZE - header.length}`);
  }
  if (!header.subarray(0, 4).equals(MAGIC)) {
    throw new ProtocolError(0, `bad magic ${JSON.stringify(header.subarray(0, 4).toString("latin1"))}`);
  }
  const w = header.readUInt32BE(4);
  const h = header.readUInt32BE(8);
  if (w === 0 || h === 0) {
    throw new ProtocolError(4, `zero dimension ${w}x${h}`);
  }
  return [w, h, 3 * w * h];
}

export function decodeRequest(data: Buffer): Frame {
  if (data.length < HEADER_SIZE) {
    throw new ProtocolError(data.length, `header short by ${HEADER_SIZE - data.length}`);
  }
  const [w, h, payload] = requestFrameSize(data.subarray(0, HEADER_SIZE));
  const expected = HEADER_SIZE + payload;
  if (data.length < expected) {
    throw new ProtocolError(data.length, `payload short by ${expected - data.length}`);
  }
  if (data.length > expected) {
    throw new ProtocolError(expected, `trailing ${data.length - expected} bytes`);
  }
  return { width: w, height: h, pixels: new Uint8Array(data.subarray(HEADER_SIZE)) };
}

export function encodeResponse(status: number, seg?: LabelMap): Buffer {
  if (status !== STATUS_OK && status !== STATUS_MODEL_ERROR && status !== STATUS_BAD_REQUEST) {
    throw new Error(`invalid status ${status}`);
  }
  if (status !== STATUS_OK) {
    const out = Buffer.alloc(5);
    out[0] = status;
    return out;
  }
  if (seg === undefined) {
    throw new Error("status 0 requires a label map");
  }
  const n = seg.width * seg.height;
  const out = Buffer.allocUnsafe(5 + 4 * n);
  out[0] = STATUS_OK;
  out.writeUInt32BE(seg.count, 1);
  for (let i = 0; i < n; i++) {
    out.writeUInt32BE(seg.labels[i] >>> 0, 5 + 4 * i);
  }
  return out;
}

/**
 * Parse a response for a width x height request.  Throws ProtocolError on
 * malformed bytes, ResponseStatusError on status 1/2; returns the label
 * map on status 0.
 */
export function decodeResponse(data: Buffer, width: number, height: number): LabelMap {
  if (data.length < 5) {
    throw new ProtocolError(data.length, `response short by ${5 - data.length}`);
  }
  const status = data[0];
  const count = data.readUInt32BE(1);
  if (status === STATUS_MODEL_ERROR || status === STATUS_BAD_REQUEST) {
    if (data.length !== 5) {
      throw new ProtocolError(5, `trailing ${data.length - 5} bytes on status ${status}`);
    }
    throw new ResponseStatusError(status);
  }
  if (status !== STATUS_OK) {
    throw new ProtocolError(0, `unknown status ${status}`);
  }
  const n = width * height;
  const expected = 5 + 4 * n;
  if (data.length < expected) {
    throw new ProtocolError(data.length, `payload short by ${expected - data.length}`);
  }
  if (data.length > expected) {
    throw new ProtocolError(expected, `trailing ${data.length - expected} bytes`);
  }
  const labels = new Int32Array(n);
  let max = 0;
  const seen = new Set<number>();
  for (let i = 0; i < n; i++) {
    const v = data.readUInt32BE(5 + 4 * i);
    labels[i] = v;
    if (v > 0) {
      seen.add(v);
      if (v > max) max = v;
    }
  }
  if (n > 0) {
    if (max > count) {
      throw new ProtocolError(5, `label ${max} exceeds declared count ${count}`);
    }
    if (seen.size !== count) {
      throw new ProtocolError(5, `labels not dense: ${seen.size} distinct vs count ${count}`);
    }
  } else if (count !== 0) {
    throw new ProtocolError(1, `count ${count} with empty label map`);
  }
  return { width, height, labels, count };
}
