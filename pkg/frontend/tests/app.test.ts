import { beforeEach, describe, expect, it, vi } from "vitest";

import type { Api } from "../src/api";
import { ApiError } from "../src/api";
import { createApp } from "../src/app";
import type {
  ActPayload,
  CreateBody,
  Envelope,
  UtteranceBody,
} from "../src/types";

function act(partial: Partial<ActPayload> = {}): ActPayload {
  return {
    kind: "open_prompt",
    text: "Automatic Railway Information System.",
    template_id: "open_prompt",
    requested: "departure_city",
    isolated: false,
    focused: [],
    solutions: [],
    query: [],
    retry_kind: null,
    ...partial,
  };
}

function envelope(partial: Partial<Envelope> = {}): Envelope {
  const emptyStore = Object.fromEntries(
    [
      "departure_city",
      "departure_station",
      "arrival_city",
      "date",
      "departure_time",
      "hour",
      "confirmation",
    ].map((slot) => [slot, { status: "unknown" as const, value: null }]),
  );
  return {
    schema_version: 1,
    session_id: "abc123def456",
    turn: 0,
    closed: false,
    failed: false,
    act: act(),
    acts: [act()],
    state: {
      slot_store: emptyStore,
      pending: [],
      focus_tree: {
        active: 0,
        nodes: [
          {
            id: 0,
            parent: null,
            mode: "shift",
            slots: {},
            requested: [],
            under_confirmation: [],
            origin_cycle: null,
            open: true,
          },
        ],
      },
      turns: 0,
      closed: false,
      failed: false,
      node: "ask",
      last_event: null,
      last_query: null,
      expectations: [],
      last_trace: null,
    },
    channel: {
      p_fail: 0,
      p_delete: 0,
      isolated_factor: 0,
      substitutions: [
        ["ROMA", "ARONA", 0],
        ["TODAY", "TOMORROW", 0],
      ],
    },
    ...partial,
  };
}

interface Recorded {
  created: CreateBody[];
  posted: { sid: string; body: UtteranceBody }[];
}

function fakeApi(responses: Envelope[]): { api: Api; recorded: Recorded } {
  const queue = [...responses];
  const recorded: Recorded = { created: [], posted: [] };
  const next = () => {
    const env = queue.shift();
    if (!env) throw new Error("fake api exhausted");
    return Promise.resolve(env);
  };
  const api: Api = {
    createSession(body = {}) {
      recorded.created.push(body);
      return next();
    },
    getSession() {
      return next();
    },
    postUtterance(sid, body) {
      recorded.posted.push({ sid, body });
      return next();
    },
    closeSession() {
      return next();
    },
    grammar() {
      return Promise.resolve({});
    },
    transcriptUrl(sid) {
      return `/api/sessions/${sid}/transcript`;
    },
  };
  return { api, recorded };
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.appendChild(root);
});

describe("new session", () => {
  it("renders the greeting and fills the pair picker", async () => {
    const { api } = fakeApi([envelope()]);
    const app = createApp(root, api);
    await app.newSession();
    expect(root.querySelector(".entry.system .line")!.textContent).toContain(
      "Railway Information",
    );
    const picker = root.querySelector<HTMLSelectElement>("#inject-pair")!;
    expect([...picker.options].map((o) => o.value)).toEqual([
      "ROMA>ARONA",
      "TODAY>TOMORROW",
    ]);
    expect(
      root.querySelector("#session-label")!.textContent,
    ).toContain("abc123def456");
  });

  it("sends the quiet-channel override while the box is checked", async () => {
    const { api, recorded } = fakeApi([envelope(), envelope()]);
    const app = createApp(root, api);
    await app.newSession();
    expect(recorded.created[0].channel).toMatchObject({
      p_fail: 0,
      substitution_p: 0,
    });

    root.querySelector<HTMLInputElement>("#quiet")!.checked = false;
    root.querySelector<HTMLInputElement>("#seed")!.value = "42";
    await app.newSession();
    expect(recorded.created[1].channel).toBeUndefined();
    expect(recorded.created[1].seed).toBe(42);
  });
});

describe("sending an utterance", () => {
  it("appends the user line and every system act of the turn", async () => {
    const reply = envelope({
      turn: 1,
      acts: [
        act({ kind: "present_info", text: "Intercity 243 leaves." }),
        act({ kind: "closing", text: "Goodbye." }),
      ],
      state: {
        ...envelope().state,
        last_event: { kind: "confirmation", corrected: [], target_cycle: 0 },
        last_trace: {
          text: "yes",
          intended: [["confirmation", "YES"]],
          heard: [["confirmation", "YES"]],
          unparseable: false,
          forced: null,
          channel: {
            failed: false,
            deleted: [],
            substituted: [],
            reverted: [],
            misparse_applied: null,
            dropped: [],
          },
        },
      },
    });
    const { api } = fakeApi([envelope(), reply]);
    const app = createApp(root, api);
    await app.newSession();
    await app.send("yes");
    const entries = [...root.querySelectorAll(".entry")];
    expect(entries.map((e) => e.className.split(" ")[1])).toEqual([
      "system",
      "user",
      "system",
      "system",
    ]);
    expect(root.querySelector(".badge")!.textContent).toBe("Confirmation");
  });

  it("attaches the corruption directive once when the toggle is armed", async () => {
    const { api, recorded } = fakeApi([
      envelope(),
      envelope({ turn: 1 }),
      envelope({ turn: 2 }),
    ]);
    const app = createApp(root, api);
    await app.newSession();

    const toggle = root.querySelector<HTMLInputElement>("#inject-toggle")!;
    const picker = root.querySelector<HTMLSelectElement>("#inject-pair")!;
    toggle.checked = true;
    picker.value = "ROMA>ARONA";
    await app.send("to Roma");
    expect(recorded.posted[0].body.corrupt).toEqual({
      kind: "substitute",
      source: "ROMA",
      target: "ARONA",
    });
    expect(toggle.checked).toBe(false);

    await app.send("to Roma again");
    expect(recorded.posted[1].body.corrupt).toBeUndefined();
  });

  it("disables the composer once the session closes", async () => {
    const closed = envelope({ turn: 1, closed: true });
    const { api } = fakeApi([envelope(), closed]);
    const app = createApp(root, api);
    await app.newSession();
    await app.send("yes");
    expect(root.querySelector<HTMLInputElement>("#utterance")!.disabled).toBe(
      true,
    );
    expect(root.querySelector<HTMLButtonElement>("#yes")!.disabled).toBe(true);
  });

  it("surfaces service errors on the status line", async () => {
    const { api } = fakeApi([envelope()]);
    const failing: Api = {
      ...api,
      postUtterance() {
        return Promise.reject(
          new ApiError(409, "closed_session", "session is closed"),
        );
      },
    };
    const app = createApp(root, failing);
    await app.newSession();
    await app.send("yes");
    expect(root.querySelector("#status-line")!.textContent).toBe(
      "session is closed",
    );
  });

  it("retries once when the service reports the session busy", async () => {
    const { api, recorded } = fakeApi([envelope(), envelope({ turn: 1 })]);
    let rejected = false;
    const flaky: Api = {
      ...api,
      postUtterance(sid, body) {
        if (!rejected) {
          rejected = true;
          return Promise.reject(
            new ApiError(409, "session_busy", "turn in progress"),
          );
        }
        return api.postUtterance(sid, body);
      },
    };
    const app = createApp(root, flaky);
    await app.newSession();
    await app.send("yes");
    expect(recorded.posted).toHaveLength(1);
    expect(root.querySelector("#status-line")!.textContent).toBe("");
    expect(root.querySelectorAll(".entry.user")).toHaveLength(1);
  });
});

describe("form wiring", () => {
  it("submitting the composer sends the input text", async () => {
    const { api, recorded } = fakeApi([envelope(), envelope({ turn: 1 })]);
    createApp(root, api);
    root.querySelector<HTMLButtonElement>("#new-session")!.click();
    await vi.waitFor(() => {
      expect(
        root.querySelector("#session-label")!.textContent,
      ).toContain("abc123def456");
    });
    const input = root.querySelector<HTMLInputElement>("#utterance")!;
    input.value = "from Milano";
    root
      .querySelector<HTMLFormElement>("#composer")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => {
      expect(recorded.posted).toHaveLength(1);
    });
    expect(recorded.posted[0].body.text).toBe("from Milano");
  });
});
