// Single-page wiring: all intelligence stays server-side; this file only
// moves session state into the DOM and user clicks back into the session.

import { ApiClient, RawRecommendResponse, ServiceError } from "./api.js";
import { Session } from "./session.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8000";

const client = new ApiClient(SERVICE_URL);
let session: Session | null = null;

const el = (id: string) => document.getElementById(id) as HTMLElement;

function showError(message: string): void {
  el("error-banner").textContent = message;
  el("error-banner").classList.remove("hidden");
  el("retry").classList.remove("hidden");
}

function clearError(): void {
  el("error-banner").classList.add("hidden");
  el("retry").classList.add("hidden");
}

async function issue(descriptor: { seq: number; remaining: string[] } | null): Promise<void> {
  if (!session || descriptor === null) {
    render();
    return;
  }
  try {
    const response: RawRecommendResponse = await client.recommendRemaining(
      descriptor.remaining,
      session.k
    );
    if (session.applyRecommendation(descriptor.seq, response)) {
      render();
    }
  } catch (error) {
    showError(error instanceof ServiceError ? error.message : String(error));
  }
}

function render(): void {
  if (!session) {
    return;
  }
  el("prefix").textContent = session.prefix.length
    ? session.prefix.join(" → ")
    : "(no activities chosen yet)";

  const poolBox = el("pool");
  poolBox.replaceChildren(
    ...session.pool.map((activity) => {
      const button = document.createElement("button");
      button.textContent = activity;
      button.addEventListener("click", () => {
        if (!session) return;
        clearError();
        void issue(session.beginStep(activity));
        render();
      });
      return button;
    })
  );

  const list = el("recommendations");
  list.replaceChildren(
    ...session.displayedRankings().map((item) => {
      const row = document.createElement("li");
      row.textContent = `${item.rank}. ${item.activity} (q=${item.q})`;
      return row;
    })
  );
  el("fallback-note").textContent =
    session.latest?.parsed.fallback_used ? "shown via fallback (state not in the table)" : "";

  const historyBox = el("history");
  historyBox.replaceChildren(
    ...session.history.map((entry) => {
      const row = document.createElement("li");
      row.textContent = `${entry.chosen} ${entry.wasTopRecommendation ? "(followed #1)" : "(override)"}`;
      return row;
    })
  );

  el("terminal-banner").classList.toggle("hidden", !session.isTerminal());
  (el("export") as HTMLButtonElement).disabled = !session.canExport();
}

function exportSession(): void {
  if (!session || !session.canExport()) {
    return;
  }
  const blob = new Blob([session.exportCsv()], { type: "text/csv" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = `${session.caseId}.csv`;
  link.click();
  URL.revokeObjectURL(link.href);
}

async function boot(): Promise<void> {
  clearError();
  try {
    const vocabulary = await client.fetchVocabulary();
    session = new Session(vocabulary);
    render();
    await issue(session.requestInitial());
  } catch (error) {
    showError(
      error instanceof ServiceError
        ? `cannot reach the recommendation service: ${error.message}`
        : String(error)
    );
  }
}

el("retry").addEventListener("click", () => void boot());
el("export").addEventListener("click", exportSession);
void boot();
