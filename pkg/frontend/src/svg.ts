/**
 * Minimal deterministic SVG plotting: fixed styles, no timestamps, no
 * randomness, so identical inputs produce byte-identical figures.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

const MARGIN: Margin = { top: 36, right: 18, bottom: 44, left: 64 };

export const PHASE_COLORS: Record<string, string> = {
  coast: "#dbe9f6",
  high_thrust: "#fbe3d5",
  low_thrust: "#fdf2cc",
  terminal_descent: "#ddeedd",
};

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) return "0";
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly r0: number,
    readonly r1: number,
  ) {}

  map(v: number): number {
    const span = this.d1 - this.d0;
    const t = span === 0 ? 0.5 : (v - this.d0) / span;
    return this.r0 + t * (this.r1 - this.r0);
  }

  ticks(count = 6): number[] {
    const span = this.d1 - this.d0;
    if (span === 0) return [this.d0];
    const step = niceStep(span / count);
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-9 * Math.abs(span); v += step) {
      out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(Math.abs(raw))));
  const norm = raw / mag;
  const nice = norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10;
  return nice * mag;
}

function pad(lo: number, hi: number): [number, number] {
  if (lo === hi) {
    const eps = Math.abs(lo) * 0.1 || 1;
    return [lo - eps, hi + eps];
  }
  const m = 0.05 * (hi - lo);
  return [lo - m, hi + m];
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return pad(lo, hi);
}

export interface AxisOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  xLog?: boolean;
}

/** One chart panel with axes, grid, tick labels, and layered marks. */
export class Panel {
  readonly width: number;
  readonly height: number;
  readonly x: LinearScale;
  readonly y: LinearScale;
  private readonly marks: string[] = [];
  private readonly opts: AxisOptions;

  constructor(xDomain: [number, number], yDomain: [number, number], opts: AxisOptions) {
    this.opts = opts;
    this.width = opts.width ?? 640;
    this.height = opts.height ?? 400;
    this.x = new LinearScale(xDomain[0], xDomain[1], MARGIN.left, this.width - MARGIN.right);
    this.y = new LinearScale(yDomain[0], yDomain[1], this.height - MARGIN.bottom, MARGIN.top);
  }

  shadeX(x0: number, x1: number, fill: string): void {
    const a = this.x.map(x0);
    const b = this.x.map(x1);
    this.marks.push(
      `<rect x="${fmt(a)}" y="${fmt(MARGIN.top)}" width="${fmt(b - a)}" ` +
      `height="${fmt(this.height - MARGIN.top - MARGIN.bottom)}" fill="${fill}"/>`,
    );
  }

  line(xs: number[], ys: number[], stroke: string, width = 1.6, dash = ""): void {
    const pts = xs.map((x, i) => `${fmt(this.x.map(x))},${fmt(this.y.map(ys[i]))}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.marks.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  segment(x0: number, y0: number, x1: number, y1: number, stroke: string, width = 1.2): void {
    this.marks.push(
      `<line x1="${fmt(this.x.map(x0))}" y1="${fmt(this.y.map(y0))}" ` +
      `x2="${fmt(this.x.map(x1))}" y2="${fmt(this.y.map(y1))}" ` +
      `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  dot(x: number, y: number, fill: string, r = 2.6): void {
    this.marks.push(
      `<circle cx="${fmt(this.x.map(x))}" cy="${fmt(this.y.map(y))}" r="${r}" fill="${fill}"/>`,
    );
  }

  hline(y: number, stroke: string, dash = "5,4"): void {
    this.marks.push(
      `<line x1="${MARGIN.left}" y1="${fmt(this.y.map(y))}" x2="${this.width - MARGIN.right}" ` +
      `y2="${fmt(this.y.map(y))}" stroke="${stroke}" stroke-width="1" stroke-dasharray="${dash}"/>`,
    );
  }

  label(x: number, y: number, text: string, fill = "#444"): void {
    this.marks.push(
      `<text x="${fmt(this.x.map(x))}" y="${fmt(this.y.map(y))}" font-size="11" fill="${fill}">${text}</text>`,
    );
  }

  render(): string {
    const parts: string[] = [];
    parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}" font-family="Helvetica, Arial, sans-serif">`,
    );
    parts.push(`<rect width="${this.width}" height="${this.height}" fill="white"/>`);
    parts.push(...this.marks.filter((m) => m.startsWith("<rect")));
    // grid and ticks above shading, below data marks
    const gx = this.x.ticks();
    const gy = this.y.ticks();
    for (const t of gx) {
      const px = fmt(this.x.map(t));
      parts.push(
        `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${this.height - MARGIN.bottom}" stroke="#eee"/>`,
        `<text x="${px}" y="${this.height - MARGIN.bottom + 16}" font-size="11" fill="#444" text-anchor="middle">${trimTick(t)}</text>`,
      );
    }
    for (const t of gy) {
      const py = fmt(this.y.map(t));
      parts.push(
        `<line x1="${MARGIN.left}" y1="${py}" x2="${this.width - MARGIN.right}" y2="${py}" stroke="#eee"/>`,
        `<text x="${MARGIN.left - 6}" y="${py}" font-size="11" fill="#444" text-anchor="end" dominant-baseline="middle">${trimTick(t)}</text>`,
      );
    }
    parts.push(
      `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${this.width - MARGIN.left - MARGIN.right}" ` +
      `height="${this.height - MARGIN.top - MARGIN.bottom}" fill="none" stroke="#888"/>`,
      `<text x="${this.width / 2}" y="20" font-size="14" fill="#222" text-anchor="middle">${this.opts.title}</text>`,
      `<text x="${this.width / 2}" y="${this.height - 8}" font-size="12" fill="#222" text-anchor="middle">${this.opts.xLabel}</text>`,
      `<text x="16" y="${this.height / 2}" font-size="12" fill="#222" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${this.height / 2})">${this.opts.yLabel}</text>`,
    );
    parts.push(...this.marks.filter((m) => !m.startsWith("<rect")));
    parts.push("</svg>");
    return parts.join("\n") + "\n";
  }
}

function trimTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}
