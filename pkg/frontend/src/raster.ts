import { Resvg } from "@resvg/resvg-js";

export const DPI = 150;

/** Rasterize an SVG string to PNG at the fixed figure DPI. */
export function rasterize(svg: string, widthIn: number): Buffer {
  const resvg = new Resvg(svg, {
    fitTo: { mode: "width", value: Math.round(widthIn * DPI) },
    font: { loadSystemFonts: true },
    background: "white",
  });
  return resvg.render().asPng();
}
