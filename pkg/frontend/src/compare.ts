// Framework-vs-raw overhead report: per-phase time ratios between a
// framework CSV and a primary-component CSV of the same experiment.

import { CsvRun, parseCsv } from "./csv";

export class ComparisonMismatchError extends Error {}

export interface OverheadReport {
  frameworkRunId: string;
  primaryRunId: string;
  /** framework min time / primary min time, per phase. */
  ratios: Record<string, number>;
  note: string;
}

function minNs(run: CsvRun, phase: string): bigint {
  const values = run.wallNs.get(phase);
  if (!values || values.length === 0) {
    throw new ComparisonMismatchError(`run ${run.runId}: no ${phase} records`);
  }
  return values.reduce((a, b) => (b < a ? b : a));
}

function pickRun(runs: CsvRun[], runId: string | null, label: string): CsvRun {
  if (runId === null) {
    if (runs.length !== 1) {
      throw new ComparisonMismatchError(
        `${label} csv holds ${runs.length} runs; pass an explicit run id`,
      );
    }
    return runs[0];
  }
  const run = runs.find((r) => r.runId === runId);
  if (!run) throw new ComparisonMismatchError(`${label} csv has no run ${runId}`);
  return run;
}

export function compareOverhead(frameworkCsv: string, primaryCsv: string,
                                frameworkRunId: string | null = null,
                                primaryRunId: string | null = null): OverheadReport {
  const fw = pickRun(parseCsv(frameworkCsv), frameworkRunId, "framework");
  const pr = pickRun(parseCsv(primaryCsv), primaryRunId, "primary");
  for (const field of ["activation", "loss", "epochs"] as const) {
    if (fw[field] !== pr[field]) {
      throw new ComparisonMismatchError(
        `${field} differs: framework ${fw[field]}, primary ${pr[field]}`,
      );
    }
  }
  const ratios: Record<string, number> = {};
  for (const phase of ["forward", "backward", "update", "total"]) {
    ratios[phase] = Number(minNs(fw, phase)) / Number(minNs(pr, phase));
  }
  return {
    frameworkRunId: fw.runId,
    primaryRunId: pr.runId,
    ratios,
    note:
      "ratio > 1 means the framework run was slower; for small networks the " +
      "framework's bookkeeping dominates the arithmetic, so large ratios are " +
      "expected and machine-dependent",
  };
}
