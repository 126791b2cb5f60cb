/**
 * Parsers for the solver's output files: trajectory.csv and
 * diagnostics.json. These files are the only contract between the solver
 * and the figure generator; nothing here recomputes physics.
 */

export const CSV_COLUMNS = [
  "time", "m", "r_x", "r_z", "v_x", "v_z", "theta", "omega", "T", "delta",
  "xi_m", "xi_r_x", "xi_r_z", "xi_v_x", "xi_v_z", "xi_theta", "xi_omega",
  "phase",
] as const;

export type PhaseName = "coast" | "high_thrust" | "low_thrust" | "terminal_descent";

export interface TrajectoryRow {
  time: number;
  m: number;
  rX: number;
  rZ: number;
  vX: number;
  vZ: number;
  theta: number;
  omega: number;
  thrust: number;
  delta: number;
  xi: { m: number; rX: number; rZ: number; vX: number; vZ: number; theta: number; omega: number };
  phase: PhaseName;
}

export interface SolverIteration {
  iteration: number;
  J_tr: number;
  J_vse: number;
  objective: number;
  pipg: {
    iterations: number;
    fixed_point_residual: number;
    equality_residual: number;
    solve_time_s: number;
    converged: boolean;
  };
}

export interface Diagnostics {
  converged: boolean;
  scp_iterations: number;
  iterations: SolverIteration[];
  propagation_defects: number[];
  pdi: { altitude_m: number; speed_m_s: number };
  phase_durations_s: number[];
  flight_time_s: number;
  propellant_used_kg: number;
  pipg_mean_solve_ms: number;
}

export class SchemaError extends Error {
  override name = "SchemaError";
}

const PHASES: ReadonlySet<string> = new Set([
  "coast", "high_thrust", "low_thrust", "terminal_descent",
]);

/** Parse trajectory.csv text; throws SchemaError naming any bad column. */
export function parseTrajectoryCsv(text: string): TrajectoryRow[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) {
    throw new SchemaError("trajectory.csv has no data rows");
  }
  const header = lines[0].split(",");
  if (header.length !== CSV_COLUMNS.length || header.some((h, i) => h !== CSV_COLUMNS[i])) {
    throw new SchemaError(
      `unexpected trajectory.csv columns: got [${header.join(", ")}]`,
    );
  }
  return lines.slice(1).map((line, rowIdx) => {
    const cells = line.split(",");
    if (cells.length !== CSV_COLUMNS.length) {
      throw new SchemaError(`row ${rowIdx + 1}: expected ${CSV_COLUMNS.length} cells`);
    }
    const num = (i: number): number => {
      const v = Number(cells[i]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`row ${rowIdx + 1}: column ${CSV_COLUMNS[i]} is not a number`);
      }
      return v;
    };
    const phase = cells[17];
    if (!PHASES.has(phase)) {
      throw new SchemaError(`row ${rowIdx + 1}: unknown phase tag '${phase}'`);
    }
    return {
      time: num(0),
      m: num(1),
      rX: num(2),
      rZ: num(3),
      vX: num(4),
      vZ: num(5),
      theta: num(6),
      omega: num(7),
      thrust: num(8),
      delta: num(9),
      xi: {
        m: num(10), rX: num(11), rZ: num(12), vX: num(13), vZ: num(14),
        theta: num(15), omega: num(16),
      },
      phase: phase as PhaseName,
    };
  });
}

/** Parse diagnostics.json text, checking the fields the figures need. */
export function parseDiagnostics(text: string): Diagnostics {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`diagnostics.json is not valid JSON: ${String(err)}`);
  }
  const obj = raw as Record<string, unknown>;
  for (const key of [
    "converged", "scp_iterations", "iterations", "pdi",
    "phase_durations_s", "flight_time_s", "propellant_used_kg",
  ]) {
    if (!(key in obj)) {
      throw new SchemaError(`diagnostics.json missing field '${key}'`);
    }
  }
  if (!Array.isArray(obj.iterations)) {
    throw new SchemaError("diagnostics.json field 'iterations' must be an array");
  }
  return obj as unknown as Diagnostics;
}

/** Node indices (1-based) where the phase tag changes. */
export function phaseBoundaries(rows: TrajectoryRow[]): number[] {
  const nodes: number[] = [];
  for (let i = 1; i < rows.length; i++) {
    if (rows[i].phase !== rows[i - 1].phase) {
      nodes.push(i + 1);
    }
  }
  return nodes;
}
