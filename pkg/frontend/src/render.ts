/**
 * Figure rendering: pure functions from validated CSV rows to an SVG string.
 * No statistics are computed here beyond arithmetic needed for drawing
 * (confidence bands are rescaled, never re-estimated).
 */

import {
  DEFAULT_BOX,
  SERIES_COLORS,
  SvgDoc,
  bandPath,
  linearScale,
  logScale,
  pathFrom,
} from "./svg.js";
import { Row, SchemaError, num } from "./schema.js";

interface ScalingPoint {
  t: number;
  eta2: number;
  lo: number;
  hi: number;
}

function groupBy<T>(items: T[], key: (item: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const bucket = out.get(k);
    if (bucket) bucket.push(item);
    else out.set(k, [item]);
  }
  return out;
}

export function renderScaling(rows: Row[]): string {
  const series = groupBy(rows, (r) => `${r.kind} (G=${r.G},F=${r.F})`);
  const pts = new Map<string, ScalingPoint[]>();
  for (const [label, rws] of series) {
    const out: ScalingPoint[] = [];
    for (const r of rws) {
      const vh = num(r.V_H);
      const eta2 = num(r.eta2);
      if (!Number.isFinite(vh) || !Number.isFinite(eta2) || eta2 <= 0) continue;
      const t = vh > 0 ? eta2 / vh : num(r.T_sense_s);
      out.push({ t, eta2, lo: num(r.V_H_ci_lo) * t, hi: num(r.V_H_ci_hi) * t });
    }
    out.sort((a, b) => a.t - b.t);
    if (out.length > 0) pts.set(label, out);
  }
  if (pts.size === 0) throw new SchemaError("no finite scaling points to plot");

  const all = [...pts.values()].flat();
  const ts = all.map((p) => p.t);
  const ys = all.flatMap((p) => [p.eta2, p.lo, p.hi]).filter((v) => v > 0);
  const x = logScale(Math.min(...ts) / 1.3, Math.max(...ts) * 1.3, DEFAULT_BOX, "x");
  const y = logScale(Math.min(...ys) / 2, Math.max(...ys) * 2, DEFAULT_BOX, "y");

  const doc = new SvgDoc(DEFAULT_BOX);
  doc.axes(x, y, "total time T (s)", "eta^2 = V_H * T (s)");

  // guide lines through the first point of the first series: constant
  // (standard-measurement bound) and 1/T (Heisenberg-like)
  const anchor = [...pts.values()][0][0];
  const tLo = Math.min(...ts) / 1.3;
  const tHi = Math.max(...ts) * 1.3;
  doc.add(
    `<path d="${pathFrom([[x(tLo), y(anchor.eta2)], [x(tHi), y(anchor.eta2)]])}" stroke="#999" stroke-dasharray="5,3" fill="none"/>`,
  );
  const c = anchor.eta2 * anchor.t;
  doc.add(
    `<path d="${pathFrom([[x(tLo), y(c / tLo)], [x(tHi), y(c / tHi)]])}" stroke="#bbb" stroke-dasharray="2,3" fill="none"/>`,
  );

  const legend: Array<{ label: string; color: string; dashed?: boolean }> = [];
  let idx = 0;
  for (const [label, series_pts] of pts) {
    const color = SERIES_COLORS[idx % SERIES_COLORS.length];
    idx += 1;
    const xs = series_pts.map((p) => x(p.t));
    const upper = series_pts.map((p) => y(Math.max(p.hi, 1e-300)));
    const lower = series_pts.map((p) => y(Math.max(p.lo, 1e-300)));
    if (series_pts.length > 1) {
      doc.add(`<path d="${bandPath(xs, upper, lower)}" fill="${color}" opacity="0.15"/>`);
    }
    const line = series_pts.map((p) => [x(p.t), y(p.eta2)] as [number, number]);
    doc.add(`<path d="${pathFrom(line)}" stroke="${color}" stroke-width="1.8" fill="none"/>`);
    for (const [px, py] of line) {
      doc.add(`<circle cx="${px.toFixed(2)}" cy="${py.toFixed(2)}" r="3" fill="${color}"/>`);
    }
    legend.push({ label, color });
  }
  legend.push({ label: "SMS (const)", color: "#999", dashed: true });
  legend.push({ label: "1/T guide", color: "#bbb", dashed: true });
  doc.legend(legend);
  return doc.toString();
}

export function renderSweep(rows: Row[]): string {
  const series = groupBy(rows, (r) => `${r.kind} N=${r.N} (G=${r.G},F=${r.F})`);
  const finiteVh: number[] = [];
  for (const r of rows) {
    const vh = num(r.V_H);
    if (Number.isFinite(vh) && vh > 0) finiteVh.push(vh);
    const lo = num(r.V_H_ci_lo);
    if (Number.isFinite(lo) && lo > 0) finiteVh.push(lo);
  }
  if (finiteVh.length === 0) throw new SchemaError("no finite V_H values to plot");
  const dets = rows.map((r) => num(r.detuning_hz) / 1e6);
  const x = linearScale(Math.min(...dets), Math.max(...dets), DEFAULT_BOX, "x");
  const yMax = Math.max(...finiteVh) * 3;
  const y = logScale(Math.min(...finiteVh) / 3, yMax, DEFAULT_BOX, "y");

  const doc = new SvgDoc(DEFAULT_BOX);
  doc.axes(x, y, "detuning f_B (MHz)", "Holevo variance V_H");
  const legend: Array<{ label: string; color: string }> = [];
  let idx = 0;
  let sawInfinite = false;
  for (const [label, rws] of series) {
    const color = SERIES_COLORS[idx % SERIES_COLORS.length];
    idx += 1;
    const sorted = [...rws].sort((a, b) => num(a.detuning_hz) - num(b.detuning_hz));
    const line: Array<[number, number]> = [];
    const xs: number[] = [];
    const upper: number[] = [];
    const lower: number[] = [];
    for (const r of sorted) {
      const fx = x(num(r.detuning_hz) / 1e6);
      const vh = num(r.V_H);
      if (!Number.isFinite(vh)) {
        // infinite sentinel: capped marker at the top of the axis
        sawInfinite = true;
        doc.add(
          `<path d="M${(fx - 4).toFixed(2)},${(DEFAULT_BOX.top + 8).toFixed(2)}L${fx.toFixed(2)},${DEFAULT_BOX.top}L${(fx + 4).toFixed(2)},${(DEFAULT_BOX.top + 8).toFixed(2)}" fill="${color}"/>`,
        );
        continue;
      }
      const py = y(Math.max(vh, Math.min(...finiteVh) / 3));
      line.push([fx, py]);
      xs.push(fx);
      upper.push(y(Math.min(Math.max(num(r.V_H_ci_hi), 1e-300), yMax)));
      lower.push(y(Math.max(num(r.V_H_ci_lo), Math.min(...finiteVh) / 3)));
    }
    if (xs.length > 1) {
      doc.add(`<path d="${bandPath(xs, upper, lower)}" fill="${color}" opacity="0.15"/>`);
    }
    if (line.length > 0) {
      doc.add(`<path d="${pathFrom(line)}" stroke="${color}" stroke-width="1.5" fill="none"/>`);
      for (const [px, py] of line) {
        doc.add(`<circle cx="${px.toFixed(2)}" cy="${py.toFixed(2)}" r="2.5" fill="${color}"/>`);
      }
    }
    legend.push({ label, color });
  }
  if (sawInfinite) {
    legend.push({ label: "marker: V_H infinite (capped)", color: "#333" });
  }
  doc.legend(legend);
  return doc.toString();
}

export function renderRtCompare(rows: Row[]): string {
  const series = groupBy(rows, (r) => `${r.kind}, R=${r.readout_reps}`);
  const etas = rows.map((r) => num(r.eta_field_nT_sqrtHz)).filter((v) => Number.isFinite(v) && v > 0);
  if (etas.length === 0) throw new SchemaError("no finite sensitivities to plot");
  const fs = rows.map((r) => num(r.F));
  const fLo = Math.min(...fs) - 0.5;
  const fHi = Math.max(...fs) + 0.5;
  const x = linearScale(fLo, fHi, DEFAULT_BOX, "x");
  const y = logScale(Math.min(...etas) / 2, Math.max(...etas) * 2, DEFAULT_BOX, "y");

  const doc = new SvgDoc(DEFAULT_BOX);
  doc.axes(x, y, "repetition increment F", "min sensitivity (nT/sqrt(Hz))");
  const legend: Array<{ label: string; color: string }> = [];
  let idx = 0;
  for (const [label, rws] of series) {
    const color = SERIES_COLORS[idx % SERIES_COLORS.length];
    idx += 1;
    const sorted = [...rws].sort((a, b) => num(a.F) - num(b.F));
    const line = sorted
      .filter((r) => Number.isFinite(num(r.eta_field_nT_sqrtHz)))
      .map((r) => [x(num(r.F)), y(num(r.eta_field_nT_sqrtHz))] as [number, number]);
    if (line.length > 1) {
      doc.add(`<path d="${pathFrom(line)}" stroke="${color}" stroke-width="1.5" fill="none"/>`);
    }
    for (const [px, py] of line) {
      doc.add(`<rect x="${(px - 3).toFixed(2)}" y="${(py - 3).toFixed(2)}" width="6" height="6" fill="${color}"/>`);
    }
    legend.push({ label, color });
  }
  doc.legend(legend);
  return doc.toString();
}
