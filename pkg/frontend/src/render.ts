// Pure DOM builders: every element is derived from envelope data alone,
// so the views can be tested without a service.

import type {
  ActPayload,
  Expectation,
  FocusTree,
  SlotPair,
  SlotState,
  Solution,
  TracePayload,
} from "./types";

export const SLOT_ORDER = [
  "departure_city",
  "departure_station",
  "arrival_city",
  "date",
  "departure_time",
  "hour",
  "confirmation",
] as const;

export function pascal(kind: string): string {
  return kind
    .split("_")
    .map((part) => part.charAt(0).toUpperCase() + part.slice(1))
    .join("");
}

function pairs(list: SlotPair[]): string {
  return list.map(([slot, value]) => `${slot}=${value}`).join(", ");
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function badge(kind: string): HTMLSpanElement {
  return el("span", `badge kind-${kind}`, pascal(kind));
}

export function slotTable(store: Record<string, SlotState>): HTMLTableElement {
  const table = el("table", "slot-table");
  const head = table.createTHead().insertRow();
  for (const label of ["slot", "status", "value"]) {
    head.appendChild(el("th", undefined, label));
  }
  const body = table.createTBody();
  for (const slot of SLOT_ORDER) {
    const state = store[slot] ?? { status: "unknown", value: null };
    const row = body.insertRow();
    row.dataset.slot = slot;
    row.dataset.status = state.status;
    row.insertCell().textContent = slot;
    const status = row.insertCell();
    status.appendChild(el("span", `chip status-${state.status}`, state.status));
    row.insertCell().textContent = state.value ?? "";
  }
  return table;
}

export function expectationList(expectations: Expectation[]): HTMLUListElement {
  const list = el("ul", "expectation-list");
  for (const expectation of expectations) {
    const item = el("li", expectation.implicature ? "implicature" : undefined);
    item.appendChild(el("span", "exp-kind", expectation.kind));
    const details: string[] = [];
    if (expectation.focused.length) details.push(pairs(expectation.focused));
    if (expectation.requested) details.push(`asks ${expectation.requested}`);
    if (details.length) {
      item.appendChild(el("span", "exp-detail", details.join("; ")));
    }
    if (expectation.implicature) {
      item.appendChild(el("span", "exp-flag", "implicature"));
    }
    list.appendChild(item);
  }
  return list;
}

export function focusTree(tree: FocusTree): HTMLUListElement {
  const list = el("ul", "focus-tree");
  const byId = new Map(tree.nodes.map((node) => [node.id, node]));
  const depth = (id: number): number => {
    let node = byId.get(id);
    let count = 0;
    while (node && node.parent !== null) {
      node = byId.get(node.parent);
      count += 1;
    }
    return count;
  };
  for (const node of tree.nodes) {
    const item = el("li");
    item.dataset.node = String(node.id);
    item.style.paddingLeft = `${depth(node.id) * 16}px`;
    if (node.id === tree.active) item.classList.add("active");
    if (!node.open) item.classList.add("closed");
    const slots = Object.entries(node.slots)
      .map(([slot, value]) => `${slot}=${value}`)
      .join(", ");
    const notes: string[] = [];
    if (slots) notes.push(slots);
    if (node.requested.length) notes.push(`asks ${node.requested.join(", ")}`);
    if (node.under_confirmation.length) {
      notes.push(`confirming ${node.under_confirmation.join(", ")}`);
    }
    item.appendChild(el("span", "node-id", `#${node.id} ${node.mode}`));
    item.appendChild(el("span", "node-detail", notes.join(" | ")));
    list.appendChild(item);
  }
  return list;
}

function solutionsTable(solutions: Solution[]): HTMLTableElement {
  const table = el("table", "solutions");
  const head = table.createTHead().insertRow();
  for (const label of ["train", "from", "departs", "to", "arrives"]) {
    head.appendChild(el("th", undefined, label));
  }
  const body = table.createTBody();
  for (const s of solutions) {
    const row = body.insertRow();
    row.insertCell().textContent = `${s.train_class} ${s.train_id}`;
    row.insertCell().textContent = s.departure_station
      ? `${s.departure_city} ${s.departure_station}`
      : s.departure_city;
    row.insertCell().textContent = s.departure_time;
    row.insertCell().textContent = s.arrival_station
      ? `${s.arrival_city} ${s.arrival_station}`
      : s.arrival_city;
    row.insertCell().textContent = s.arrival_time;
    body.appendChild(row);
  }
  return table;
}

export function actEntry(act: ActPayload): HTMLElement {
  const entry = el("article", `entry system act-${act.kind}`);
  entry.appendChild(el("p", "line", act.text));
  if (act.isolated) {
    entry.appendChild(el("p", "note", "answer with a single word"));
  }
  if (act.solutions.length) {
    entry.appendChild(solutionsTable(act.solutions));
  }
  return entry;
}

export function userEntry(
  text: string,
  trace: TracePayload | null,
): HTMLElement {
  const entry = el("article", "entry user");
  entry.appendChild(el("p", "line", text));
  if (!trace) return entry;
  if (trace.channel.failed) {
    entry.appendChild(el("p", "note garbled", "nothing came through"));
  } else if (trace.unparseable) {
    entry.appendChild(el("p", "note garbled", "no keywords recognized"));
  } else if (
    JSON.stringify(trace.heard) !== JSON.stringify(trace.intended)
  ) {
    const heard = trace.heard ?? [];
    const note = el("p", "note garbled", `heard as: ${pairs(heard)}`);
    if (trace.forced) note.classList.add("forced");
    entry.appendChild(note);
  }
  return entry;
}
