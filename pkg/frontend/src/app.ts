import { ApiError, type Api } from "./api";
import type { CreateBody, Envelope, UtteranceBody } from "./types";
import {
  actEntry,
  badge,
  expectationList,
  focusTree,
  slotTable,
  userEntry,
} from "./render";

// All channel probabilities off, pair catalog kept for the injector.
const QUIET_CHANNEL = {
  p_fail: 0,
  p_delete: 0,
  isolated_factor: 0,
  misparses: [],
  substitution_p: 0,
};

const SHELL = `
  <header>
    <div class="title">
      <span id="state-dot" class="dot idle"></span>
      <h1>raildialog</h1>
      <span id="session-label" class="session-label">no session</span>
    </div>
    <div class="session-controls">
      <label><input type="checkbox" id="quiet" checked> quiet channel</label>
      <input id="seed" type="number" placeholder="seed" title="random seed">
      <button id="new-session">New session</button>
      <a id="transcript-link" class="hidden" target="_blank">transcript</a>
    </div>
  </header>
  <p id="status-line" class="status-line"></p>
  <main>
    <section class="chat">
      <div id="transcript" class="transcript"></div>
      <form id="composer" class="composer">
        <input id="utterance" autocomplete="off"
               placeholder='try "from Milano to Roma this evening"'>
        <button id="send" type="submit">Send</button>
        <button id="yes" type="button">Yes</button>
        <button id="no" type="button">No</button>
      </form>
      <div class="injector">
        <label class="toggle">
          <input type="checkbox" id="inject-toggle"> corrupt this turn
        </label>
        <select id="inject-pair" title="substitution pair"></select>
        <span class="injector-hint">forces one place-name substitution</span>
      </div>
    </section>
    <aside class="inspector">
      <section>
        <h2>Slots</h2>
        <div id="slots"></div>
      </section>
      <section>
        <h2>Expectations</h2>
        <div id="expectations"></div>
      </section>
      <section>
        <h2>Focus</h2>
        <div id="focus-tree"></div>
      </section>
    </aside>
  </main>
`;

export function createApp(root: HTMLElement, api: Api) {
  root.innerHTML = SHELL;
  const pick = <T extends HTMLElement>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (!node) throw new Error(`missing ${selector}`);
    return node;
  };

  const transcript = pick<HTMLDivElement>("#transcript");
  const composer = pick<HTMLFormElement>("#composer");
  const input = pick<HTMLInputElement>("#utterance");
  const yesButton = pick<HTMLButtonElement>("#yes");
  const noButton = pick<HTMLButtonElement>("#no");
  const injectToggle = pick<HTMLInputElement>("#inject-toggle");
  const pairSelect = pick<HTMLSelectElement>("#inject-pair");
  const quiet = pick<HTMLInputElement>("#quiet");
  const seedInput = pick<HTMLInputElement>("#seed");
  const newButton = pick<HTMLButtonElement>("#new-session");
  const sessionLabel = pick<HTMLSpanElement>("#session-label");
  const stateDot = pick<HTMLSpanElement>("#state-dot");
  const statusLine = pick<HTMLParagraphElement>("#status-line");
  const transcriptLink = pick<HTMLAnchorElement>("#transcript-link");
  const slotsPanel = pick<HTMLDivElement>("#slots");
  const expectationsPanel = pick<HTMLDivElement>("#expectations");
  const focusPanel = pick<HTMLDivElement>("#focus-tree");

  let env: Envelope | null = null;
  let busy = false;

  function refreshPairPicker(envelope: Envelope): void {
    const selected = pairSelect.value;
    pairSelect.replaceChildren();
    for (const [source, target] of envelope.channel.substitutions) {
      const option = document.createElement("option");
      option.value = `${source}>${target}`;
      option.textContent = `${source} -> ${target}`;
      pairSelect.appendChild(option);
    }
    if (selected) pairSelect.value = selected;
    if (!pairSelect.value && pairSelect.options.length) {
      pairSelect.selectedIndex = 0;
    }
  }

  function renderInspector(envelope: Envelope): void {
    sessionLabel.textContent =
      `${envelope.session_id} / turn ${envelope.turn}`;
    stateDot.className = envelope.failed
      ? "dot failed"
      : envelope.closed
        ? "dot closed"
        : "dot live";
    const done = envelope.closed;
    input.disabled = done;
    yesButton.disabled = done;
    noButton.disabled = done;
    transcriptLink.href = api.transcriptUrl(envelope.session_id);
    transcriptLink.classList.remove("hidden");
    slotsPanel.replaceChildren(slotTable(envelope.state.slot_store));
    expectationsPanel.replaceChildren(
      expectationList(envelope.state.expectations),
    );
    focusPanel.replaceChildren(focusTree(envelope.state.focus_tree));
    refreshPairPicker(envelope);
  }

  function appendSystemActs(envelope: Envelope, withBadge: boolean): void {
    envelope.acts.forEach((act, index) => {
      const entry = actEntry(act);
      if (withBadge && index === 0 && envelope.state.last_event) {
        entry.prepend(badge(envelope.state.last_event.kind));
      }
      transcript.appendChild(entry);
    });
    transcript.scrollTop = transcript.scrollHeight;
  }

  async function run(work: () => Promise<void>): Promise<void> {
    if (busy) return;
    busy = true;
    root.dataset.busy = "1";
    statusLine.textContent = "";
    try {
      await work();
    } catch (error) {
      statusLine.textContent =
        error instanceof Error ? error.message : String(error);
    } finally {
      busy = false;
      delete root.dataset.busy;
    }
  }

  async function newSession(): Promise<void> {
    await run(async () => {
      const body: CreateBody = {};
      if (quiet.checked) body.channel = { ...QUIET_CHANNEL };
      const seed = seedInput.value.trim();
      if (seed) body.seed = Number(seed);
      env = await api.createSession(body);
      transcript.replaceChildren();
      appendSystemActs(env, false);
      renderInspector(env);
    });
  }

  async function post(sid: string, body: UtteranceBody): Promise<Envelope> {
    try {
      return await api.postUtterance(sid, body);
    } catch (error) {
      if (error instanceof ApiError && error.code === "session_busy") {
        await new Promise((resolve) => setTimeout(resolve, 250));
        return api.postUtterance(sid, body);
      }
      throw error;
    }
  }

  async function send(text: string): Promise<void> {
    const spoken = text.trim();
    if (!spoken || !env || env.closed) return;
    await run(async () => {
      const body: UtteranceBody = { text: spoken };
      if (injectToggle.checked && pairSelect.value) {
        const [source, target] = pairSelect.value.split(">");
        body.corrupt = { kind: "substitute", source, target };
        injectToggle.checked = false;
      }
      env = await post(env!.session_id, body);
      transcript.appendChild(userEntry(spoken, env.state.last_trace));
      appendSystemActs(env, true);
      renderInspector(env);
      input.value = "";
    });
  }

  newButton.addEventListener("click", (event) => {
    event.preventDefault();
    void newSession();
  });
  composer.addEventListener("submit", (event) => {
    event.preventDefault();
    void send(input.value);
  });
  yesButton.addEventListener("click", () => void send("yes"));
  noButton.addEventListener("click", () => void send("no"));

  return {
    newSession,
    send,
    get envelope(): Envelope | null {
      return env;
    },
  };
}

export type App = ReturnType<typeof createApp>;
