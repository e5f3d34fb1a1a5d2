import type { FigureModel, Panel, Point } from "./figures.js";

// Layout runs in logical units of 1/100 inch; rasterization maps the full
// figure to pixels at the chosen DPI.
const UNITS_PER_INCH = 100;
const MARGIN = { top: 34, right: 16, bottom: 8, left: 10 };
const PANEL_PAD = { top: 30, right: 14, bottom: 52, left: 62 };
const LEGEND_HEIGHT = 16;

interface Scale {
  (value: number): number;
  ticks: number[];
}

function niceStep(span: number, targetTicks: number): number {
  const raw = span / Math.max(targetTicks, 1);
  const magnitude = 10 ** Math.floor(Math.log10(raw));
  for (const mult of [1, 2, 5, 10]) {
    if (mult * magnitude >= raw) return mult * magnitude;
  }
  return 10 * magnitude;
}

function linearScale(values: number[], rangeLo: number, rangeHi: number, pad = 0.05): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const padding = (hi - lo) * pad;
  lo -= padding;
  hi += padding;
  const step = niceStep(hi - lo, 5);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12; t += step) {
    ticks.push(Math.abs(t) < 1e-12 ? 0 : t);
  }
  const scale = ((value: number) =>
    rangeLo + ((value - lo) / (hi - lo)) * (rangeHi - rangeLo)) as Scale;
  scale.ticks = ticks;
  return scale;
}

function formatTick(value: number): string {
  if (value !== 0 && (Math.abs(value) >= 10_000 || Math.abs(value) < 0.001)) {
    return value.toExponential(1);
  }
  const text = value.toPrecision(4);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
}

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function renderPanel(panel: Panel, x0: number, y0: number, width: number, height: number): string {
  const plotX = x0 + PANEL_PAD.left;
  const plotY = y0 + PANEL_PAD.top + LEGEND_HEIGHT;
  const plotW = width - PANEL_PAD.left - PANEL_PAD.right;
  const plotH = height - PANEL_PAD.top - PANEL_PAD.bottom - LEGEND_HEIGHT;

  const xs = panel.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = panel.series.flatMap((s) => s.points.map((p) => p.y));
  const sx = linearScale(xs, plotX, plotX + plotW);
  const sy = linearScale(ys, plotY + plotH, plotY);

  const parts: string[] = [];
  parts.push(
    `<text x="${x0 + width / 2}" y="${y0 + 18}" text-anchor="middle" font-size="13" font-weight="bold">${escapeXml(panel.title)}</text>`,
  );
  parts.push(
    `<rect x="${plotX}" y="${plotY}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const t of sx.ticks) {
    const px = sx(t);
    if (px < plotX - 1e-6 || px > plotX + plotW + 1e-6) continue;
    parts.push(
      `<line x1="${px.toFixed(2)}" y1="${plotY + plotH}" x2="${px.toFixed(2)}" y2="${plotY + plotH + 5}" stroke="#333" stroke-width="1"/>`,
      `<text x="${px.toFixed(2)}" y="${plotY + plotH + 18}" text-anchor="middle" font-size="10">${formatTick(t)}</text>`,
    );
  }
  for (const t of sy.ticks) {
    const py = sy(t);
    if (py < plotY - 1e-6 || py > plotY + plotH + 1e-6) continue;
    parts.push(
      `<line x1="${plotX - 5}" y1="${py.toFixed(2)}" x2="${plotX}" y2="${py.toFixed(2)}" stroke="#333" stroke-width="1"/>`,
      `<text x="${plotX - 8}" y="${(py + 3.5).toFixed(2)}" text-anchor="end" font-size="10">${formatTick(t)}</text>`,
      `<line x1="${plotX}" y1="${py.toFixed(2)}" x2="${plotX + plotW}" y2="${py.toFixed(2)}" stroke="#ddd" stroke-width="0.5"/>`,
    );
  }
  parts.push(
    `<text x="${plotX + plotW / 2}" y="${y0 + height - 16}" text-anchor="middle" font-size="11">${escapeXml(panel.xLabel)}</text>`,
    `<text x="${x0 + 14}" y="${plotY + plotH / 2}" text-anchor="middle" font-size="11" transform="rotate(-90 ${x0 + 14} ${plotY + plotH / 2})">${escapeXml(panel.yLabel)}</text>`,
  );

  // legend row above the plot area
  let legendX = plotX;
  const legendY = y0 + PANEL_PAD.top + 4;
  for (const series of panel.series) {
    parts.push(
      `<line x1="${legendX}" y1="${legendY}" x2="${legendX + 16}" y2="${legendY}" stroke="${series.color}" stroke-width="2"/>`,
      `<circle cx="${legendX + 8}" cy="${legendY}" r="2.5" fill="${series.color}"/>`,
      `<text x="${legendX + 20}" y="${legendY + 3.5}" font-size="10">${escapeXml(series.label)}</text>`,
    );
    legendX += 26 + 7.5 * series.label.length;
  }

  // polylines and markers: every marker is one CSV mean cell, unsmoothed
  for (const series of panel.series) {
    const coords = series.points.map((p: Point) => `${sx(p.x).toFixed(2)},${sy(p.y).toFixed(2)}`);
    parts.push(
      `<polyline points="${coords.join(" ")}" fill="none" stroke="${series.color}" stroke-width="1.6"/>`,
    );
    for (const p of series.points) {
      parts.push(
        `<circle class="datapoint" cx="${sx(p.x).toFixed(2)}" cy="${sy(p.y).toFixed(2)}" r="3" fill="${series.color}"/>`,
      );
    }
  }
  return parts.join("\n");
}

/** Deterministic SVG for a figure model (same model, same bytes). */
export function renderSvg(model: FigureModel): string {
  const width = model.widthIn * UNITS_PER_INCH;
  const height = model.heightIn * UNITS_PER_INCH;
  const columns = model.columns;
  const rows = Math.ceil(model.panels.length / columns);
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;
  const panelW = innerW / columns;
  const panelH = innerH / rows;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="DejaVu Sans, sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${escapeXml(model.title)}</text>`,
  );
  model.panels.forEach((panel, index) => {
    const col = index % columns;
    const row = Math.floor(index / columns);
    parts.push(
      renderPanel(panel, MARGIN.left + col * panelW, MARGIN.top + row * panelH, panelW, panelH),
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** Count of data markers in a rendered SVG (one per plotted point). */
export function countMarkers(svg: string): number {
  return (svg.match(/class="datapoint"/g) ?? []).length;
}
