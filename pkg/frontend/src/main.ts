// Browser entry point. Configuration comes from the URL:
//   index.html?server=127.0.0.1:9301&room=ops&session=s-a
// The server value is the edge service's WebSocket/HTTP port; the same
// origin also answers GET /scenario.

import { render } from "./render";
import { apply, initialState, type ConsoleEvent, type ScenarioDoc, type ViewState } from "./state";
import { ConsoleTransport } from "./transport";

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? "127.0.0.1:9301";
const room = params.get("room") ?? "ops";
const sessionId = params.get("session") ?? `console-${Math.random().toString(36).slice(2, 8)}`;

let state: ViewState = initialState(sessionId);
const viewRoot = document.getElementById("view")!;

function dispatch(ev: ConsoleEvent): void {
  state = apply(state, ev);
  render(state, viewRoot);
}

function poseSeq(objectId: string): number {
  return (state.collab.poses[objectId]?.seq ?? 0) + 1;
}

async function boot(): Promise<void> {
  const doc = (await (await fetch(`http://${server}/scenario`)).json()) as ScenarioDoc;
  dispatch({ type: "scenario", doc });

  const transport = await ConsoleTransport.connect(
    `ws://${server}/`,
    sessionId,
    (url) => new WebSocket(url),
    dispatch,
  );
  await transport.request("hello", { capabilities: ["card_id"] });
  await transport.request("collab_join", { room });

  const controls = document.getElementById("controls")!;
  const button = (label: string, onClick: () => void): void => {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", onClick);
    controls.appendChild(b);
  };

  button("localize", () => void transport.request("localize_request", {}));
  button("localize (message passing)", () =>
    void transport.request("localize_request", { algo: "mp" }),
  );
  button("navigate P1 to P4", () =>
    void transport.request("nav_request", { from: "P1", to: "P4", shelf_level: 1 }),
  );
  button("identify cards", () => {
    const frame = Object.keys(state.elements).length ? "shelf2-cam" : "";
    void transport.request("card_id_request", { frame });
  });
  button("drop a stroke", () =>
    void transport.request("stroke_add", {
      points: [
        [0.5, 0.5, 0],
        [1.5, 1.2, 0],
      ],
      color: "RED",
    }),
  );

  // dragging a gizmo publishes a pose with the next sequence number;
  // the canvas is repainted from whatever the server answers/broadcasts
  let dragging: string | null = null;
  viewRoot.addEventListener("mousedown", (ev) => {
    const canvas = (ev.target as HTMLElement).closest<HTMLCanvasElement>("#collab-canvas");
    if (!canvas) return;
    dragging = Object.keys(state.collab.poses)[0] ?? "card";
  });
  viewRoot.addEventListener("mouseup", (ev) => {
    if (!dragging) return;
    const canvas = (ev.target as HTMLElement).closest<HTMLCanvasElement>("#collab-canvas");
    const objectId = dragging;
    dragging = null;
    if (!canvas) return;
    const rect = canvas.getBoundingClientRect();
    const x = (ev.clientX - rect.left) / 60;
    const y = (canvas.height - (ev.clientY - rect.top)) / 60;
    void transport.request("pose_update", {
      object_id: objectId,
      position: [x, y, 0],
      orientation: [1, 0, 0, 0],
      seq: poseSeq(objectId),
    });
  });
}

void boot();
