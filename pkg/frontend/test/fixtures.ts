/** Synthetic solver outputs mirroring the documented file schemas. */

import { CSV_COLUMNS } from "../src/schema.js";

const PHASE_OF_NODE = (k: number): string => {
  if (k < 2) return "coast";
  if (k < 7) return "high_thrust";
  if (k < 12) return "low_thrust";
  return "terminal_descent";
};

/** 16-node descent-like trajectory with phase changes at nodes 2, 7, 12. */
export function fixtureCsv(): string {
  const rows: string[] = [CSV_COLUMNS.join(",")];
  let t = 0;
  for (let k = 1; k <= 16; k++) {
    const frac = (k - 1) / 15;
    const m = 1e5 - 7000 * frac;
    const rX = 1000 * (1 - frac) ** 1.3;
    const rZ = 100 * (1 - frac);
    const vX = -90 * (1 - frac);
    const vZ = 5 * (1 - frac);
    const theta = (Math.PI / 2) * (1 - frac);
    const omega = -0.05 * (1 - frac);
    const thrust = k === 1 ? 0 : k < 7 ? 4.6e6 : 1.5e6;
    const delta = k === 1 || k === 16 ? 0 : 0.05 * Math.sin(k);
    const cells = [
      t, m, rX, rZ, vX, vZ, theta, omega, thrust, delta,
      m, rX, rZ, vX, vZ, theta, omega,
    ].map((v) => v.toPrecision(17));
    cells.push(PHASE_OF_NODE(k));
    rows.push(cells.join(","));
    t += k < 2 ? 6.5 : k < 7 ? 0.7 : k < 12 ? 0.9 : 1.5;
  }
  return rows.join("\n") + "\n";
}

export function fixtureDiagnostics(iterations = 9): string {
  const its = Array.from({ length: iterations }, (_, i) => ({
    iteration: i + 1,
    J_tr: 500 * Math.pow(0.1, i),
    J_vse: 1e-4 * Math.pow(0.2, i),
    objective: -0.9 - 0.001 * i,
    pipg: {
      iterations: 50000 - 3000 * i,
      fixed_point_residual: 1e-10,
      equality_residual: 1e-10,
      solve_time_s: 0.4,
      converged: true,
    },
  }));
  return JSON.stringify({
    converged: true,
    scp_iterations: iterations,
    total_wall_time_s: 12.0,
    solve_wall_time_s: 11.0,
    pipg_mean_solve_ms: 400.0,
    iterations: its,
    propagation_defects: Array.from({ length: 15 }, () => 1e-7),
    max_propagation_defect: 1e-7,
    feasibility: { trigger_altitude: 5e-7 },
    max_violation: 5e-7,
    single_crossing: true,
    pdi: { altitude_m: 450.0, speed_m_s: 86.0 },
    phase_durations_s: [6.5, 3.5, 4.5, 6.0],
    flight_time_s: 20.5,
    propellant_used_kg: 7000.0,
  });
}
