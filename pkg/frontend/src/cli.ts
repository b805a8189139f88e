#!/usr/bin/env node
// Standalone framework-baseline benchmark.
//
//   run     --config c.json [--params w.bin] [--out out.csv] [--report r.json]
//   compare --framework fw.csv --primary raw.csv [--out report.json]
//   parity  --manifest m.json
//
// Exit codes: 0 success, 1 parity failure, 2 config error, 3 numeric
// divergence, 4 params shape mismatch / comparison mismatch.

import * as fs from "fs";
import { parseConfig, ConfigError } from "./config";
import { readParams } from "./params";
import { DivergenceError, ParamsShapeError, runFrameworkBenchmark } from "./benchmark";
import { emitCsv } from "./csv";
import { compareOverhead, ComparisonMismatchError } from "./compare";

interface Flags {
  [key: string]: string;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new ConfigError(`usage: expected --flag value pairs, got ${key}`);
    }
    flags[key.slice(2)] = argv[i + 1];
  }
  return flags;
}

function readJson(path: string): unknown {
  try {
    return JSON.parse(fs.readFileSync(path, "utf-8") || "{}");
  } catch (e) {
    throw new ConfigError(`${path}: ${(e as Error).message}`);
  }
}

function cmdRun(flags: Flags): number {
  if (!flags.config) throw new ConfigError("run: --config is required");
  const config = parseConfig(readJson(flags.config));
  const params = flags.params ? readParams(fs.readFileSync(flags.params)) : null;
  const result = runFrameworkBenchmark(config, params);
  const csv = emitCsv(config, result.records);
  if (flags.out) {
    fs.writeFileSync(flags.out, csv);
  } else {
    process.stdout.write(csv);
  }
  if (flags.report) {
    fs.writeFileSync(
      flags.report,
      JSON.stringify(
        {
          run_id: config.runId,
          initial_loss: result.initialLoss,
          final_loss: result.finalLoss,
          epochs: config.epochs,
          repeats: config.repeats,
          imported_params: flags.params ?? null,
        },
        null,
        2,
      ) + "\n",
    );
  }
  console.error(
    `run ${config.runId}: initial loss ${result.initialLoss}, final loss ${result.finalLoss}`,
  );
  return 0;
}

function cmdCompare(flags: Flags): number {
  if (!flags.framework || !flags.primary) {
    throw new ConfigError("compare: --framework and --primary are required");
  }
  const report = compareOverhead(
    fs.readFileSync(flags.framework, "utf-8"),
    fs.readFileSync(flags.primary, "utf-8"),
    flags["framework-run"] ?? null,
    flags["primary-run"] ?? null,
  );
  const text = JSON.stringify(report, null, 2) + "\n";
  if (flags.out) {
    fs.writeFileSync(flags.out, text);
  }
  process.stdout.write(text);
  return 0;
}

interface ParityManifest {
  config: string;
  params: string;
  expected_loss: number;
  tolerance: number;
  relative?: boolean;
}

function cmdParity(flags: Flags): number {
  if (!flags.manifest) throw new ConfigError("parity: --manifest is required");
  const manifest = readJson(flags.manifest) as ParityManifest;
  for (const key of ["config", "params", "expected_loss", "tolerance"]) {
    if (!(key in manifest)) throw new ConfigError(`manifest: missing key ${key}`);
  }
  if (!(manifest.tolerance > 0)) throw new ConfigError("manifest: tolerance must be > 0");
  const config = parseConfig(readJson(manifest.config));
  const params = readParams(fs.readFileSync(manifest.params));
  const result = runFrameworkBenchmark(config, params);
  const diff = Math.abs(result.finalLoss - manifest.expected_loss);
  const bound = manifest.relative
    ? manifest.tolerance * Math.abs(manifest.expected_loss)
    : manifest.tolerance;
  const pass = diff <= bound;
  process.stdout.write(
    JSON.stringify(
      {
        framework_loss: result.finalLoss,
        expected_loss: manifest.expected_loss,
        abs_diff: diff,
        bound,
        relative: manifest.relative ?? false,
        pass,
      },
      null,
      2,
    ) + "\n",
  );
  return pass ? 0 : 1;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    if (command === "run") return cmdRun(flags);
    if (command === "compare") return cmdCompare(flags);
    if (command === "parity") return cmdParity(flags);
    throw new ConfigError(`unknown command ${command ?? "(none)"}; expected run, compare or parity`);
  } catch (e) {
    if (e instanceof ConfigError) {
      console.error(`config error: ${e.message}`);
      return 2;
    }
    if (e instanceof DivergenceError) {
      console.error(`divergence error: ${e.message}`);
      return 3;
    }
    if (e instanceof ParamsShapeError || e instanceof ComparisonMismatchError) {
      console.error(`comparison error: ${e.message}`);
      return 4;
    }
    if (e instanceof Error && e.message.startsWith("params file:")) {
      console.error(`config error: ${e.message}`);
      return 2;
    }
    throw e;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
