/** Minimal deterministic SVG assembly: scales, paths, axes, legend. */

export interface Box {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_BOX: Box = {
  width: 640,
  height: 440,
  left: 70,
  right: 24,
  top: 26,
  bottom: 52,
};

export type Scale = {
  (v: number): number;
  ticks: () => number[];
};

function span(box: Box, axis: "x" | "y"): [number, number] {
  return axis === "x"
    ? [box.left, box.width - box.right]
    : [box.height - box.bottom, box.top];
}

export function linearScale(lo: number, hi: number, box: Box, axis: "x" | "y"): Scale {
  const [a, b] = span(box, axis);
  const d = hi - lo || 1;
  const f = ((v: number) => a + ((v - lo) / d) * (b - a)) as Scale;
  f.ticks = () => {
    const step = niceStep(d / 5);
    const out: number[] = [];
    for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * Math.abs(d); t += step) {
      out.push(Number(t.toPrecision(12)));
    }
    return out;
  };
  return f;
}

export function logScale(lo: number, hi: number, box: Box, axis: "x" | "y"): Scale {
  if (!(lo > 0) || !(hi > 0)) throw new Error("log scale needs positive bounds");
  const [a, b] = span(box, axis);
  const llo = Math.log10(lo);
  const d = Math.log10(hi) - llo || 1;
  const f = ((v: number) => a + ((Math.log10(v) - llo) / d) * (b - a)) as Scale;
  f.ticks = () => {
    const out: number[] = [];
    for (let e = Math.ceil(llo); e <= Math.floor(llo + d) + 1e-9; e += 1) {
      out.push(10 ** e);
    }
    return out.length >= 2 ? out : [lo, hi];
  };
  return f;
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(Math.abs(raw) || 1));
  const r = raw / mag;
  return (r >= 5 ? 10 : r >= 2 ? 5 : r >= 1 ? 2 : 1) * mag;
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return String(Number(v.toPrecision(6)));
}

export function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`)
    .join("");
}

export function bandPath(
  xs: number[],
  upper: number[],
  lower: number[],
): string {
  const fwd = xs.map((x, i) => [x, upper[i]] as [number, number]);
  const back = xs
    .map((x, i) => [x, lower[i]] as [number, number])
    .reverse();
  return pathFrom(fwd) + pathFrom(back).replace(/^M/, "L") + "Z";
}

export const SERIES_COLORS = [
  "#d62728", "#ff7f0e", "#2ca02c", "#1f77b4", "#9467bd", "#8c564b",
];

export class SvgDoc {
  private parts: string[] = [];

  constructor(private box: Box) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  axes(
    x: Scale,
    y: Scale,
    xLabel: string,
    yLabel: string,
  ): void {
    const b = this.box;
    const x0 = b.left;
    const x1 = b.width - b.right;
    const y0 = b.height - b.bottom;
    const y1 = b.top;
    this.add(
      `<path d="M${x0},${y1}L${x0},${y0}L${x1},${y0}" fill="none" stroke="#333" stroke-width="1"/>`,
    );
    for (const t of x.ticks()) {
      const px = x(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.add(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="#333"/>`);
      this.add(
        `<text x="${px.toFixed(2)}" y="${y0 + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`,
      );
    }
    for (const t of y.ticks()) {
      const py = y(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.add(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333"/>`);
      this.add(
        `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" font-size="11" text-anchor="end">${fmt(t)}</text>`,
      );
    }
    this.add(
      `<text x="${(x0 + x1) / 2}" y="${b.height - 12}" font-size="13" text-anchor="middle">${xLabel}</text>`,
    );
    this.add(
      `<text x="16" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})">${yLabel}</text>`,
    );
  }

  legend(entries: Array<{ label: string; color: string; dashed?: boolean }>): void {
    const b = this.box;
    let yy = b.top + 8;
    for (const e of entries) {
      const x0 = b.width - b.right - 170;
      this.add(
        `<line x1="${x0}" y1="${yy}" x2="${x0 + 22}" y2="${yy}" stroke="${e.color}" stroke-width="2"${e.dashed ? ' stroke-dasharray="5,3"' : ""}/>`,
      );
      this.add(`<text x="${x0 + 28}" y="${yy + 4}" font-size="11">${e.label}</text>`);
      yy += 16;
    }
  }

  toString(): string {
    const b = this.box;
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${b.width}" height="${b.height}" viewBox="0 0 ${b.width} ${b.height}">` +
      `<rect width="${b.width}" height="${b.height}" fill="white"/>` +
      this.parts.join("") +
      `</svg>`
    );
  }
}
