// DOM painter: ViewState in, pixels out. Nothing in here decides colors
// or routes; it draws exactly what the reducer derived from the protocol.

import type { Badge, ViewState } from "./state";

const BADGE_CSS: Record<Badge, string> = {
  RED: "#d33",
  BLUE: "#36c",
  NONE: "#bbb",
};

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBanner(state: ViewState, root: HTMLElement): void {
  const banner = el("div", "banner");
  if (state.banner) {
    banner.textContent = state.banner;
    banner.classList.add(state.connected ? "banner-error" : "banner-reconnect");
  } else {
    banner.textContent = state.connected
      ? `session ${state.sessionId} connected`
      : "disconnected";
  }
  root.appendChild(banner);
}

function renderTopology(state: ViewState, root: HTMLElement): void {
  const panel = el("section", "panel topology");
  panel.appendChild(el("h2", undefined, state.scenarioName ?? "topology"));

  const byNode = new Map<string, string[]>();
  for (const id of Object.keys(state.elements).sort()) {
    const node = state.elements[id].node || "spans";
    if (!byNode.has(node)) byNode.set(node, []);
    byNode.get(node)!.push(id);
  }
  for (const [node, ids] of [...byNode.entries()].sort()) {
    const row = el("div", "node-row");
    row.appendChild(el("span", "node-name", node));
    for (const id of ids) {
      const badge = el("span", "element-badge", id);
      badge.style.borderColor = BADGE_CSS[state.badges[id] ?? "NONE"];
      if (state.badges[id] === "RED") badge.classList.add("root-cause");
      row.appendChild(badge);
    }
    panel.appendChild(row);
  }

  if (state.ranking) {
    const table = el("table", "ranking");
    const head = el("tr");
    head.appendChild(el("th", undefined, `ranking (${state.rankingAlgo})`));
    head.appendChild(el("th", undefined, "score"));
    table.appendChild(head);
    for (const [id, score] of state.ranking) {
      const tr = el("tr");
      tr.appendChild(el("td", undefined, id));
      tr.appendChild(el("td", undefined, score.toFixed(4)));
      table.appendChild(tr);
    }
    panel.appendChild(table);
  }
  root.appendChild(panel);
}

function renderNav(state: ViewState, root: HTMLElement): void {
  if (!state.navGrid) return;
  const panel = el("section", "panel nav");
  panel.appendChild(el("h2", undefined, "navigation"));
  const canvas = document.createElement("canvas");
  const scale = 12;
  const [nx, ny] = state.navGrid.dims;
  canvas.width = nx * scale;
  canvas.height = ny * scale;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#f6f6f6";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#444";
  for (const [cx, cy] of state.navGrid.blocked) {
    ctx.fillRect(cx * scale, (ny - 1 - cy) * scale, scale, scale);
  }
  if (state.nav) {
    ctx.fillStyle = "#3a3";
    for (const [cx, cy] of state.nav.cells) {
      ctx.fillRect(cx * scale + 3, (ny - 1 - cy) * scale + 3, scale - 6, scale - 6);
    }
    const res = state.navGrid.resolution_m;
    const [ox, oy] = state.navGrid.origin_m;
    const toPx = (xm: number, ym: number): [number, number] => [
      ((xm - ox) / res) * scale,
      (ny - (ym - oy) / res) * scale,
    ];
    ctx.strokeStyle = "#182";
    for (const arrow of state.nav.arrows) {
      const [ax, ay] = toPx(arrow.position_m[0], arrow.position_m[1]);
      const dx = Math.cos(arrow.heading_rad) * scale;
      const dy = -Math.sin(arrow.heading_rad) * scale;
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(ax + dx, ay + dy);
      ctx.stroke();
    }
    const [fx, fy] = toPx(state.nav.flag.position_m[0], state.nav.flag.position_m[1]);
    ctx.fillStyle = "#d33";
    ctx.fillRect(fx - 3, fy - 12, 6, 12);
    ctx.fillStyle = "#000";
    ctx.fillText(`flag ${state.nav.flag.height_m.toFixed(1)} m`, fx + 6, fy - 4);
    panel.appendChild(el("div", "nav-cost", `path cost ${state.nav.cost.toFixed(2)}`));
  }
  panel.appendChild(canvas);
  root.appendChild(panel);
}

function renderOverlay(state: ViewState, root: HTMLElement): void {
  if (!state.overlay) return;
  const panel = el("section", "panel overlay");
  panel.appendChild(
    el("h2", undefined, `${state.overlay.frame} -> ${state.overlay.shelf}`),
  );
  const strip = el("div", "overlay-strip");
  for (const item of state.overlay.items) {
    const box = el("div", "overlay-box");
    box.style.borderColor = BADGE_CSS[item.color];
    box.style.borderWidth = item.color === "NONE" ? "1px" : "3px";
    box.appendChild(el("div", "overlay-label", `${item.slot}: ${item.label}`));
    box.appendChild(el("div", "overlay-conf", item.confidence.toFixed(2)));
    strip.appendChild(box);
  }
  panel.appendChild(strip);
  if (!state.overlay.root_cause_visible) {
    panel.appendChild(el("div", "overlay-note", "root cause is not on this shelf"));
  }
  root.appendChild(panel);
}

function renderCollab(state: ViewState, root: HTMLElement): void {
  const panel = el("section", "panel collab");
  panel.appendChild(
    el("h2", undefined, state.collab.room ? `room ${state.collab.room}` : "collaboration"),
  );
  panel.appendChild(
    el("div", "participants", `participants: ${state.collab.participants.join(", ") || "-"}`),
  );

  const canvas = document.createElement("canvas");
  canvas.id = "collab-canvas";
  canvas.width = 360;
  canvas.height = 240;
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#fcfcf6";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const scale = 60; // meters to pixels, top-down
  for (const stroke of state.collab.strokes) {
    ctx.strokeStyle = stroke.color === "BLUE" ? "#36c" : "#d33";
    ctx.beginPath();
    stroke.points.forEach(([x, y], i) => {
      if (i === 0) ctx.moveTo(x * scale, canvas.height - y * scale);
      else ctx.lineTo(x * scale, canvas.height - y * scale);
    });
    ctx.stroke();
  }
  for (const [oid, pose] of Object.entries(state.collab.poses).sort()) {
    const px = pose.position[0] * scale;
    const py = canvas.height - pose.position[1] * scale;
    ctx.fillStyle = state.collab.snappedBack.includes(oid) ? "#e90" : "#555";
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#000";
    const q = pose.orientation.map((v) => v.toFixed(2)).join(", ");
    ctx.fillText(`${oid} seq=${pose.seq} q=(${q})`, px + 10, py + 3);
  }
  panel.appendChild(canvas);

  const chat = el("div", "chat");
  for (const line of state.chat) {
    chat.appendChild(el("div", "chat-line", `${line.from}: ${line.text}`));
  }
  panel.appendChild(chat);
  root.appendChild(panel);
}

export function render(state: ViewState, root: HTMLElement): void {
  root.replaceChildren();
  renderBanner(state, root);
  renderTopology(state, root);
  renderNav(state, root);
  renderOverlay(state, root);
  renderCollab(state, root);
}
