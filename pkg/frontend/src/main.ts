import { fetchEvents, fetchMinuteSeries, fetchStatus, postSetpoint } from "./api.js";
import { buildLines, renderChart } from "./charts.js";
import { renderTopology } from "./topology.js";
import {
  DashboardViewModel,
  describeEvent,
  formatSimTime,
  validateSetpoint,
} from "./viewmodel.js";

const vm = new DashboardViewModel();
const POLL_MS = 2000;
const MS_PER_MINUTE = 60_000;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function renderStatusBar(): void {
  const bar = $("status-bar");
  if (vm.isStale(Date.now())) {
    bar.className = "stale";
    bar.textContent = vm.snapshot
      ? `stale data — last sim time ${formatSimTime(vm.snapshot.sim_time)}`
      : "waiting for base station…";
    return;
  }
  bar.className = "live";
  bar.textContent = `live — sim time ${formatSimTime(vm.snapshot!.sim_time)}`;
}

function renderAcs(): void {
  const host = $("acs");
  if (!vm.snapshot) return;
  host.replaceChildren();
  for (const [id, ac] of Object.entries(vm.snapshot.acs)) {
    const card = document.createElement("div");
    card.className = "ac-card";
    card.innerHTML =
      `<h3>${id}</h3>` +
      `<dl><dt>target</dt><dd>${ac.target.toFixed(1)} °C</dd>` +
      `<dt>last command</dt><dd>${ac.last_command == null ? "—" : ac.last_command.toFixed(1) + " °C"}</dd>` +
      `<dt>setpoint</dt><dd>${ac.setpoint.toFixed(1)} °C</dd>` +
      `<dt>cooling</dt><dd>${ac.cooling_w.toFixed(0)} W</dd></dl>`;
    host.appendChild(card);
  }
  const select = $("sp-ac") as unknown as HTMLSelectElement;
  const acIds = Object.keys(vm.snapshot.acs);
  if (select.options.length !== acIds.length) {
    select.replaceChildren(
      ...acIds.map((id) => new Option(id, id)),
    );
  }
}

function renderAlerts(): void {
  const list = $("alerts");
  list.replaceChildren();
  const open = vm.unacknowledged();
  $("alert-count").textContent = String(open.length);
  if (open.length === 0) {
    const li = document.createElement("li");
    li.className = "quiet";
    li.textContent = "no active alerts";
    list.appendChild(li);
    return;
  }
  for (const alert of open) {
    const li = document.createElement("li");
    li.className = `alert alert-${alert.kind}`;
    const text = document.createElement("span");
    text.textContent = `[${formatSimTime(alert.t)}] ${alert.message}`;
    const btn = document.createElement("button");
    btn.textContent = "ack";
    btn.addEventListener("click", () => {
      vm.acknowledge(alert.id);
      renderAlerts();
    });
    li.append(text, btn);
    list.appendChild(li);
  }
}

function renderEventFeed(): void {
  if (!vm.snapshot) return;
  const feed = $("event-feed");
  feed.replaceChildren();
  for (const ev of vm.snapshot.recent_events.slice(-12).reverse()) {
    const li = document.createElement("li");
    li.textContent = `[${formatSimTime(ev.t)}] ${describeEvent(ev)}`;
    feed.appendChild(li);
  }
}

async function pollStatus(): Promise<void> {
  try {
    const snap = await fetchStatus();
    vm.applySnapshot(snap, Date.now());
    const views = vm.nodeViews();
    renderStatusBar();
    renderAcs();
    renderEventFeed();
    renderTopology($("topology") as unknown as SVGSVGElement, snap, views);

    for (const v of views) {
      if (v.role === "sink") continue;
      const from = (vm.lastBucket(v.id) + 1) * MS_PER_MINUTE;
      const buckets = await fetchMinuteSeries(v.id, from);
      vm.mergeSeries(v.id, buckets);
    }
    renderChart(
      $("chart") as HTMLCanvasElement,
      buildLines(views, vm.series),
    );
  } catch {
    renderStatusBar();
  }
}

async function pollEvents(): Promise<void> {
  try {
    const events = await fetchEvents(vm.eventCursor);
    vm.ingestEvents(events);
    renderAlerts();
  } catch {
    // next poll retries; the status bar already shows staleness
  }
}

function wireSetpointForm(): void {
  const form = $("sp-form") as unknown as HTMLFormElement;
  const input = $("sp-value") as unknown as HTMLInputElement;
  const select = $("sp-ac") as unknown as HTMLSelectElement;
  const msg = $("sp-msg");
  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const err = validateSetpoint(input.value);
    if (err) {
      msg.className = "error";
      msg.textContent = err;
      return;
    }
    msg.className = "";
    msg.textContent = "sending…";
    const result = await postSetpoint(select.value, Number(input.value));
    if (result.ok) {
      msg.className = "ok";
      msg.textContent = `target ${Number(input.value).toFixed(1)} °C accepted`;
      await pollStatus();
    } else {
      msg.className = "error";
      msg.textContent = `rejected: ${result.error} — retry?`;
    }
  });
}

wireSetpointForm();
void pollStatus();
void pollEvents();
setInterval(() => void pollStatus(), POLL_MS);
setInterval(() => void pollEvents(), POLL_MS);
