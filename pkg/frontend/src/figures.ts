/**
 * Figure builders. Each function maps the parsed solver outputs to one SVG
 * string; all styling is fixed so output is a pure function of the inputs.
 *
 * Figures:
 *   trajectory   planar path with attitude glyphs and thrust vectors,
 *                glideslope cone and trigger line
 *   timeseries   altitude, speed, mass, tilt, gimbal, thrust vs time with
 *                phase-shaded background
 *   convergence  trust-region / virtual-state penalties and subproblem
 *                iteration counts per outer iteration
 */

import {
  Diagnostics,
  PhaseName,
  TrajectoryRow,
  phaseBoundaries,
} from "./schema.js";
import { PHASE_COLORS, Panel, extent } from "./svg.js";

export const FIGURE_NAMES = ["trajectory", "timeseries", "convergence"] as const;
export type FigureName = (typeof FIGURE_NAMES)[number];

const SPEED = (r: TrajectoryRow): number => Math.hypot(r.vX, r.vZ);
const DEG = 180 / Math.PI;

function shadePhases(panel: Panel, rows: TrajectoryRow[]): void {
  let start = 0;
  for (let i = 1; i <= rows.length; i++) {
    if (i === rows.length || rows[i].phase !== rows[start].phase) {
      const t0 = rows[start].time;
      const t1 = i === rows.length ? rows[rows.length - 1].time : rows[i].time;
      panel.shadeX(t0, t1, PHASE_COLORS[rows[start].phase]);
      start = i;
    }
  }
}

/** Planar trajectory: altitude vs crossrange, body axis and thrust glyphs. */
export function trajectoryFigure(rows: TrajectoryRow[]): string {
  const xs = rows.map((r) => r.rZ);
  const ys = rows.map((r) => r.rX);
  const xDom = extent([...xs, -60, 60]);
  const yDom = extent([...ys, 0]);
  const panel = new Panel(xDom, yDom, {
    title: "Planar descent trajectory",
    xLabel: "crossrange r_z [m]",
    yLabel: "altitude r_x [m]",
    width: 520,
    height: 640,
  });
  const trigger = rows.find((r) => r.phase === "terminal_descent");
  if (trigger) {
    panel.hline(trigger.rX, "#b22222");
    panel.label(xDom[0] + 4, trigger.rX + 12, "trigger altitude", "#b22222");
    // glideslope cone below the trigger point
    const tan = Math.tan((5 * Math.PI) / 180);
    panel.line([0, trigger.rX * tan], [0, trigger.rX], "#999", 1.0, "4,4");
    panel.line([0, -trigger.rX * tan], [0, trigger.rX], "#999", 1.0, "4,4");
  }
  panel.line(xs, ys, "#1f5fa8", 1.8);
  // attitude glyphs (body longitudinal axis) and thrust vectors
  const glyph = 0.045 * (yDom[1] - yDom[0]);
  const maxThrust = Math.max(...rows.map((r) => r.thrust), 1);
  for (const r of rows) {
    const bx = Math.cos(r.theta);
    const bz = -Math.sin(r.theta);
    panel.segment(r.rZ - glyph * bz * 0.5, r.rX - glyph * bx * 0.5,
      r.rZ + glyph * bz * 0.5, r.rX + glyph * bx * 0.5, "#333", 2.0);
    if (r.thrust > 0) {
      const len = glyph * 1.4 * (r.thrust / maxThrust);
      const tx = Math.cos(r.theta + r.delta);
      const tz = -Math.sin(r.theta + r.delta);
      panel.segment(r.rZ, r.rX, r.rZ - len * tz, r.rX - len * tx, "#d2691e", 1.4);
    }
    panel.dot(r.rZ, r.rX, "#1f5fa8", 2.2);
  }
  return panel.render();
}

interface Series {
  title: string;
  yLabel: string;
  values: (r: TrajectoryRow) => number;
  reference?: number;
}

const SERIES: Series[] = [
  { title: "Altitude", yLabel: "r_x [m]", values: (r) => r.rX, reference: 100 },
  { title: "Speed", yLabel: "|v| [m/s]", values: SPEED },
  { title: "Mass", yLabel: "m [kg]", values: (r) => r.m },
  { title: "Tilt", yLabel: "theta [deg]", values: (r) => r.theta * DEG },
  { title: "Gimbal", yLabel: "delta [deg]", values: (r) => r.delta * DEG },
  { title: "Thrust", yLabel: "T [kN]", values: (r) => r.thrust / 1e3 },
];

/** Six stacked time histories with phase-shaded backgrounds. */
export function timeseriesFigure(rows: TrajectoryRow[]): string {
  const panels = SERIES.map((s) => {
    const ys = rows.map(s.values);
    const panel = new Panel(
      [rows[0].time, rows[rows.length - 1].time],
      extent(s.reference !== undefined ? [...ys, s.reference] : ys),
      { title: s.title, xLabel: "time [s]", yLabel: s.yLabel, width: 620, height: 260 },
    );
    shadePhases(panel, rows);
    if (s.reference !== undefined) {
      panel.hline(s.reference, "#b22222");
    }
    panel.line(rows.map((r) => r.time), ys, "#1f5fa8", 1.8);
    for (const r of rows) {
      panel.dot(r.time, s.values(r), "#1f5fa8", 2.0);
    }
    return panel.render();
  });
  return stack(panels, 620, 260);
}

/** Outer-loop penalties (log scale) and per-subproblem iterations. */
export function convergenceFigure(diag: Diagnostics): string {
  const its = diag.iterations.map((it) => it.iteration);
  const jtr = diag.iterations.map((it) => Math.log10(Math.max(it.J_tr, 1e-30)));
  const jvse = diag.iterations.map((it) => Math.log10(Math.max(it.J_vse, 1e-30)));
  const p1 = new Panel(
    [its[0], its[its.length - 1]],
    extent([...jtr, ...jvse]),
    {
      title: "Outer-loop convergence",
      xLabel: "outer iteration",
      yLabel: "log10 penalty",
      width: 620,
      height: 320,
    },
  );
  p1.line(its, jtr, "#1f5fa8", 1.8);
  p1.line(its, jvse, "#2e8b57", 1.8);
  for (let i = 0; i < its.length; i++) {
    p1.dot(its[i], jtr[i], "#1f5fa8");
    p1.dot(its[i], jvse[i], "#2e8b57");
  }
  p1.label(its[0] + 0.3, jtr[0], "trust region", "#1f5fa8");
  p1.label(its[0] + 0.3, jvse[0] - 0.6, "virtual-state error", "#2e8b57");

  const inner = diag.iterations.map((it) => it.pipg.iterations / 1e3);
  const p2 = new Panel([its[0], its[its.length - 1]], extent([...inner, 0]), {
    title: "Subproblem solver effort",
    xLabel: "outer iteration",
    yLabel: "inner iterations [thousands]",
    width: 620,
    height: 320,
  });
  p2.line(its, inner, "#8b4513", 1.8);
  for (let i = 0; i < its.length; i++) {
    p2.dot(its[i], inner[i], "#8b4513");
  }
  return stack([p1.render(), p2.render()], 620, 320);
}

/** Concatenate same-width panels vertically into one SVG document. */
function stack(panels: string[], width: number, height: number): string {
  const inner = panels
    .map((svg, i) => {
      const body = svg
        .replace(/^<svg[^>]*>/, "")
        .replace(/<\/svg>\s*$/, "");
      return `<g transform="translate(0 ${i * height})">${body}</g>`;
    })
    .join("\n");
  const total = panels.length * height;
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${total}" ` +
    `viewBox="0 0 ${width} ${total}" font-family="Helvetica, Arial, sans-serif">\n` +
    inner +
    "\n</svg>\n"
  );
}

export interface FigureOutput {
  name: FigureName;
  svg: string;
}

export function makeFigures(
  rows: TrajectoryRow[],
  diag: Diagnostics,
  selection: readonly FigureName[] = FIGURE_NAMES,
): FigureOutput[] {
  const builders: Record<FigureName, () => string> = {
    trajectory: () => trajectoryFigure(rows),
    timeseries: () => timeseriesFigure(rows),
    convergence: () => convergenceFigure(diag),
  };
  return selection.map((name) => ({ name, svg: builders[name]() }));
}

export { phaseBoundaries };
