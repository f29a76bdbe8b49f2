/**
 * Serial SEG1 server: one connection at a time, one request at a time.
 *
 * A malformed request gets a 5-byte status=2 response and the connection
 * is closed, since a desynced stream cannot be trusted.  A model
 * exception gets status=1 and the connection stays up.  Additional
 * clients queue (paused) until the active connection closes; responses
 * always arrive in request order because nothing is processed
 * concurrently.
 */

import * as net from "net";
import { SegModel, compositeMasks } from "./model";
import {
  HEADER_SIZE,
  STATUS_BAD_REQUEST,
  STATUS_MODEL_ERROR,
  STATUS_OK,
  encodeResponse,
  requestFrameSize,
} from "./proto";

export interface ServerHandle {
  port: number;
  close(): Promise<void>;
}

export function serveSegmenter(host: string, port: number, model: SegModel): Promise<ServerHandle> {
  const waiting: net.Socket[] = [];
  let active: net.Socket | null = null;

  function adopt(sock: net.Socket): void {
    active = sock;
    sock.setNoDelay(true);
    let pending: Buffer = Buffer.alloc(0);

    const onData = (chunk: Buffer) => {
      pending = pending.length === 0 ? chunk : Buffer.concat([pending, chunk]);
      for (;;) {
        if (pending.length < HEADER_SIZE) return;
        let width: number, height: number, payload: number;
        try {
          [width, height, payload] = requestFrameSize(pending.subarray(0, HEADER_SIZE));
        } catch {
          sock.removeListener("data", onData);
          sock.end(encodeResponse(STATUS_BAD_REQUEST));
          return;
        }
        if (pending.length < HEADER_SIZE + payload) return;
        const pixels = new Uint8Array(pending.subarray(HEADER_SIZE, HEADER_SIZE + payload));
        pending = pending.subarray(HEADER_SIZE + payload);
        let reply: Buffer;
        try {
          const masks = model.segment({ width, height, pixels });
          reply = encodeResponse(STATUS_OK, compositeMasks(masks, width, height));
        } catch {
          reply = encodeResponse(STATUS_MODEL_ERROR);
        }
        sock.write(reply);
      }
    };

    sock.on("data", onData);
    sock.on("error", () => sock.destroy());
    sock.on("close", () => {
      active = null;
      const nextSock = waiting.shift();
      if (nextSock !== undefined) {
        nextSock.resume();
        adopt(nextSock);
      }
    });
  }

  const server = net.createServer((sock) => {
    if (active !== null) {
      sock.pause();
      waiting.push(sock);
      sock.on("close", () => {
        const idx = waiting.indexOf(sock);
        if (idx >= 0) waiting.splice(idx, 1);
      });
      return;
    }
    adopt(sock);
  });

  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address() as net.AddressInfo;
      resolve({
        port: addr.port,
        close: () =>
          new Promise<void>((done) => {
            for (const sock of waiting.splice(0)) sock.destroy();
            if (active !== null) active.destroy();
            server.close(() => done());
          }),
      });
    });
  });
}
