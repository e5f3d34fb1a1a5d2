import { join } from "node:path";
import { extractSeries, readSummaryCsv } from "./csv.js";

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  color: string;
  points: Point[];
}

export interface Panel {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
}

export interface FigureModel {
  name: FigureName;
  title: string;
  columns: number;
  widthIn: number;
  heightIn: number;
  panels: Panel[];
}

export type FigureName = "fig3" | "fig4" | "fig5" | "fig6";

export const FIGURE_NAMES: FigureName[] = ["fig3", "fig4", "fig5", "fig6"];

const MEASURE_SERIES: [string, string][] = [
  ["sos_n", "#1f77b4"],
  ["sos_k", "#ff7f0e"],
  ["sos_r", "#2ca02c"],
  ["sos_b", "#d62728"],
  ["sos_w", "#9467bd"],
];

const PROPORTION_SERIES: [string, string][] = [
  ["product_proportion", "#d62728"],
  ["difference_proportion", "#1f77b4"],
];

function measureLabel(quantity: string): string {
  const key = quantity.split("_").at(-1);
  return `R2_${key} SOS`;
}

function proportionLabel(quantity: string): string {
  return quantity === "product_proportion" ? "Prod" : "Diff";
}

function loadPanel(
  csvPath: string,
  title: string,
  xLabel: string,
  yLabel: string,
  series: [string, string][],
  label: (quantity: string) => string,
): Panel {
  const rows = readSummaryCsv(csvPath);
  return {
    title,
    xLabel,
    yLabel,
    series: series.map(([quantity, color]) => ({
      label: label(quantity),
      color,
      points: extractSeries(rows, quantity, csvPath),
    })),
  };
}

/** Assemble the data model for one figure from a harness run directory. */
export function buildFigure(name: FigureName, inDir: string): FigureModel {
  const sos = (family: string) => join(inDir, `${family}_sos.csv`);
  const proportions = (family: string) => join(inDir, `${family}_proportions.csv`);

  switch (name) {
    case "fig3":
      return {
        name,
        title: "Product vs difference proportion mediated (single mediator)",
        columns: 1,
        widthIn: 7,
        heightIn: 9,
        panels: [
          loadPanel(
            proportions("S1"),
            "(A) Varying censor rate",
            "censor rate",
            "proportion mediated",
            PROPORTION_SERIES,
            proportionLabel,
          ),
          loadPanel(
            proportions("S2"),
            "(B) Varying sample size",
            "n",
            "proportion mediated",
            PROPORTION_SERIES,
            proportionLabel,
          ),
        ],
      };
    case "fig4":
      return {
        name,
        title: "SOS of five R2 measures vs censor rate (five mediators)",
        columns: 1,
        widthIn: 8,
        heightIn: 6,
        panels: [
          loadPanel(
            sos("M1"),
            "Varying censor rate",
            "censor rate",
            "SOS",
            MEASURE_SERIES,
            measureLabel,
          ),
        ],
      };
    case "fig5":
      return {
        name,
        title: "SOS of five R2 measures vs association strength and censoring",
        columns: 2,
        widthIn: 11,
        heightIn: 9,
        panels: [
          loadPanel(sos("M2"), "(A) Varying a", "a", "SOS", MEASURE_SERIES, measureLabel),
          loadPanel(sos("M3"), "(B) Varying b", "b", "SOS", MEASURE_SERIES, measureLabel),
          loadPanel(sos("M4"), "(C) Varying r", "r", "SOS", MEASURE_SERIES, measureLabel),
          loadPanel(
            sos("M1"),
            "(D) Varying censor rate",
            "censor rate",
            "SOS",
            MEASURE_SERIES,
            measureLabel,
          ),
        ],
      };
    case "fig6":
      return {
        name,
        title: "SOS of five R2 measures vs number of mediators",
        columns: 1,
        widthIn: 8,
        heightIn: 6,
        panels: [
          loadPanel(
            sos("M5"),
            "Varying the number of mediators",
            "number of mediators",
            "SOS",
            MEASURE_SERIES,
            measureLabel,
          ),
        ],
      };
  }
}

/** Total plotted points per figure, series by series (for verification). */
export function pointCounts(model: FigureModel): Record<string, number> {
  const counts: Record<string, number> = {};
  model.panels.forEach((panel, index) => {
    for (const series of panel.series) {
      counts[`panel${index}:${series.label}`] = series.points.length;
    }
  });
  return counts;
}
