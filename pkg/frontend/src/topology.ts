import type { Snapshot } from "./types.js";
import type { NodeView } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";

/**
 * Fixed room-plan positions. Nodes with known ids land on the floor plan
 * (sink by the door, sensors in their aisles); any other id falls back to a
 * computed slot along the bottom edge.
 */
const LAYOUT: Record<number, { x: number; y: number }> = {
  0: { x: 60, y: 40 },
  1: { x: 300, y: 40 },
  2: { x: 120, y: 110 },
  3: { x: 360, y: 110 },
  9: { x: 120, y: 200 },
  10: { x: 200, y: 200 },
  11: { x: 360, y: 200 },
  12: { x: 440, y: 200 },
};

function pos(id: number): { x: number; y: number } {
  return LAYOUT[id] ?? { x: 40 + (id % 12) * 40, y: 260 };
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export function renderTopology(
  svg: SVGSVGElement,
  snap: Snapshot,
  views: NodeView[],
): void {
  svg.replaceChildren();
  const byId = new Map(views.map((v) => [v.id, v]));

  for (const edge of snap.tree_edges) {
    const a = pos(edge.child);
    const b = pos(edge.parent);
    const dead = byId.get(edge.child)?.grayed ?? false;
    svg.appendChild(
      el("line", {
        x1: String(a.x),
        y1: String(a.y),
        x2: String(b.x),
        y2: String(b.y),
        stroke: dead ? "#bbb" : "#5a7d9a",
        "stroke-width": "2",
        "stroke-dasharray": dead ? "4 3" : "",
      }),
    );
  }

  for (const v of views) {
    const p = pos(v.id);
    const fill = v.grayed ? "#c8c8c8" : v.hot ? "#d1495b" : v.role === "sink" ? "#333" : "#2a9d8f";
    svg.appendChild(
      el("circle", {
        cx: String(p.x),
        cy: String(p.y),
        r: v.role === "sink" ? "13" : "11",
        fill,
        opacity: v.grayed ? "0.6" : "1",
      }),
    );
    const label = el("text", {
      x: String(p.x),
      y: String(p.y + 4),
      "text-anchor": "middle",
      "font-size": "10",
      fill: "#fff",
    });
    label.textContent = `${v.id}`;
    svg.appendChild(label);
    if (v.zone) {
      const zone = el("text", {
        x: String(p.x),
        y: String(p.y + 26),
        "text-anchor": "middle",
        "font-size": "9",
        fill: v.grayed ? "#aaa" : "#555",
      });
      zone.textContent = v.zone;
      svg.appendChild(zone);
    }
  }
}
