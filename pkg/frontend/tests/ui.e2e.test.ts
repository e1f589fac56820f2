// Drives the real DOM against a live session service: the classic
// misheard-destination repair, reproduced end to end through the UI.
//
// The service is spawned here; run with `npm run test:ui`.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, expect, it } from "vitest";

import { makeApi } from "../src/api";
import { createApp } from "../src/app";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | undefined;

async function until<T>(
  probe: () => T | null | undefined | false | Promise<T | null | undefined | false>,
  what: string,
  timeoutMs = 20_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const got = await probe();
      if (got) return got;
    } catch {
      // not ready yet
    }
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "raildialog.cli", "serve", "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await until(
    async () => (await fetch(`${BASE}/api/grammar`)).ok,
    "the session service",
  );
});

afterAll(() => {
  server?.kill();
});

function query<T extends HTMLElement>(root: HTMLElement, selector: string): T {
  const node = root.querySelector<T>(selector);
  if (!node) throw new Error(`missing ${selector}`);
  return node;
}

function submit(root: HTMLElement, text: string): void {
  query<HTMLInputElement>(root, "#utterance").value = text;
  query<HTMLFormElement>(root, "#composer").dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }),
  );
}

it("repairs a forced place-name substitution through the chat UI", async () => {
  const root = document.createElement("div");
  document.body.appendChild(root);
  createApp(root, makeApi(BASE));

  // quiet channel: deterministic, but the pair catalog stays available
  query<HTMLInputElement>(root, "#quiet").checked = true;
  query<HTMLButtonElement>(root, "#new-session").click();
  await until(
    () => root.querySelector(".entry.system"),
    "the greeting",
  );
  expect(query(root, "#session-label").textContent).toContain("turn 0");

  const picker = query<HTMLSelectElement>(root, "#inject-pair");
  expect([...picker.options].map((o) => o.value)).toContain("ROMA>ARONA");
  picker.value = "ROMA>ARONA";

  // turn 1: "to Roma", corrupted on the wire into ARONA
  query<HTMLInputElement>(root, "#inject-toggle").checked = true;
  submit(root, "to Roma");
  await until(
    () => root.querySelectorAll(".entry.user").length === 1 || null,
    "the corrupted turn",
  );
  const entries = [...root.querySelectorAll(".entry")];
  expect(entries.at(-1)!.textContent).toContain("Arona");
  expect(
    query(root, ".entry.user .note.garbled").textContent,
  ).toContain("arrival_city=ARONA");
  // the inspector already offers the correction reading
  expect(root.querySelector(".expectation-list li.implicature")).not.toBeNull();

  // turn 2: the caller insists, without saying "no"
  submit(root, "I said Roma");
  const repairBadge = await until(
    () => root.querySelector(".badge.kind-implicature_repair"),
    "the repair badge",
  );
  expect(repairBadge.textContent).toBe("ImplicatureRepair");
  const confirmLine = [...root.querySelectorAll(".entry.system .line")].at(-1)!;
  expect(confirmLine.textContent).toContain("Roma");

  // turn 3: confirm the corrected destination
  query<HTMLButtonElement>(root, "#yes").click();
  const row = await until(() => {
    const candidate = root.querySelector('tr[data-slot="arrival_city"]');
    return candidate?.getAttribute("data-status") === "confirmed"
      ? candidate
      : null;
  }, "the confirmed slot row");
  expect(row.getAttribute("data-status")).toBe("confirmed");
  expect(row.textContent).toContain("ROMA");
  expect(row.querySelector(".chip.status-confirmed")).not.toBeNull();
});
