// Console entry point: wires the bus client, view model, canvas, command
// box, plan badges, and event feed together. All user input leaves the
// page as bus frames; nothing is simulated locally.

import { BusClient } from "./bus.js";
import { renderTopDown } from "./render.js";
import { applyFrame, emptyViewModel, setConnection } from "./state.js";

const vm = emptyViewModel();

const canvas = document.getElementById("world") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("connection")!;
const descriptionEl = document.getElementById("description")!;
const badgesEl = document.getElementById("badges")!;
const feedEl = document.getElementById("feed")!;
const commandInput = document.getElementById("command") as HTMLInputElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const sendButton = document.getElementById("send") as HTMLButtonElement;
const scanToggle = document.getElementById("show-scan") as HTMLInputElement;
const regenInput = document.getElementById("regen-spec") as HTMLTextAreaElement;
const regenButton = document.getElementById("regen") as HTMLButtonElement;

const wsUrl = `ws://${location.host || "127.0.0.1:9090"}/`;
const bus = new BusClient(wsUrl, {
  onFrame: (frame) => applyFrame(vm, frame),
  onConnection: (state) => setConnection(vm, state),
});
bus.connect();

let requestCounter = 0;

function submitCommand(): void {
  const text = commandInput.value.trim();
  if (!text) {
    return;
  }
  requestCounter += 1;
  const id = `ui-${requestCounter}`;
  const topic = modeSelect.value === "plan" ? "/plan" : "/command";
  if (!bus.publish(topic, "string", { data: text }, id)) {
    setConnection(vm, "disconnected");
    return;
  }
  vm.feed.push({ kind: "info", text: `you (${modeSelect.value}): ${text}` });
  commandInput.value = "";
}

sendButton.addEventListener("click", submitCommand);
commandInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    submitCommand();
  }
});

regenButton.addEventListener("click", () => {
  try {
    const spec = JSON.parse(regenInput.value);
    bus.publish("/env/regenerate", "env_spec", spec, "regen");
  } catch (error) {
    vm.feed.push({ kind: "error", text: `spec is not valid JSON: ${error}` });
  }
});

function phaseClass(phase: string): string {
  if (phase === "done") return "badge done";
  if (phase === "failed") return "badge failed";
  if (phase === "pending") return "badge pending";
  return "badge active";
}

function redrawPanels(): void {
  statusEl.textContent = vm.connection;
  statusEl.className = `pill ${vm.connection}`;
  descriptionEl.textContent = vm.description ?? "(no description yet)";
  badgesEl.innerHTML = "";
  for (const call of vm.planCalls) {
    const badge = document.createElement("span");
    badge.className = phaseClass(call.phase);
    badge.textContent = `${call.name} · ${call.phase}`;
    badgesEl.appendChild(badge);
  }
  const atBottom =
    feedEl.scrollTop + feedEl.clientHeight >= feedEl.scrollHeight - 8;
  feedEl.innerHTML = "";
  for (const entry of vm.feed) {
    const row = document.createElement("div");
    row.className = `feed-${entry.kind}`;
    row.textContent = entry.text;
    feedEl.appendChild(row);
  }
  if (atBottom) {
    feedEl.scrollTop = feedEl.scrollHeight;
  }
}

function frame(): void {
  const rect = canvas.getBoundingClientRect();
  if (canvas.width !== rect.width || canvas.height !== rect.height) {
    canvas.width = rect.width;
    canvas.height = rect.height;
  }
  renderTopDown(ctx, vm, canvas.width, canvas.height, {
    showScan: scanToggle.checked,
  });
  redrawPanels();
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
