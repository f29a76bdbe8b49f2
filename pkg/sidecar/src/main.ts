/**
 * CLI entry point.
 *
 *   sam-sidecar --listen host:port --model stub|external \
 *               [--model-module path] [--model-options string]
 *
 * stub mode needs no assets.  external mode loads a node module that
 * exports createModel(options); the options string is passed through
 * without interpretation.
 */

import * as path from "path";
import { SegModel, loadExternalModel } from "./model";
import { createStubModel } from "./stub";
import { serveSegmenter } from "./server";

interface Args {
  listen: string;
  model: string;
  modelModule?: string;
  modelOptions?: string;
}

export function parseArgs(argv: string[]): Args {
  const args: Args = { listen: "127.0.0.1:5555", model: "stub" };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const take = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${flag} needs a value`);
      return v;
    };
    switch (flag) {
      case "--listen":
        args.listen = take();
        break;
      case "--model":
        args.model = take();
        break;
      case "--model-module":
        args.modelModule = take();
        break;
      case "--model-options":
        args.modelOptions = take();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (args.model !== "stub" && args.model !== "external") {
    throw new Error(`--model must be stub or external, got ${args.model}`);
  }
  if (args.model === "external" && !args.modelModule) {
    throw new Error("--model external requires --model-module");
  }
  return args;
}

export function parseListen(listen: string): [string, number] {
  const sep = listen.lastIndexOf(":");
  if (sep <= 0 || sep === listen.length - 1) {
    throw new Error(`--listen expects host:port, got ${listen}`);
  }
  const port = Number(listen.slice(sep + 1));
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`invalid port in ${listen}`);
  }
  return [listen.slice(0, sep), port];
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  const [host, port] = parseListen(args.listen);
  let model: SegModel;
  if (args.model === "stub") {
    model = createStubModel();
  } else {
    model = loadExternalModel(path.resolve(args.modelModule!), args.modelOptions);
  }
  const handle = await serveSegmenter(host, port, model);
  console.log(`sam-sidecar listening on ${host}:${handle.port} (model=${args.model})`);
  const shutdown = () => {
    handle.close().then(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

if (require.main === module) {
  main().catch((err) => {
    console.error(`sam-sidecar: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  });
}
