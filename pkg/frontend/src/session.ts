// Trace-pilot session state machine.
//
// The core is synchronous and transport-free: `beginStep` mutates the
// prefix/pool partition and hands back a sequence-numbered request
// descriptor; whoever performs the fetch feeds the body back through
// `applyRecommendation`, where stale responses (an older sequence number)
// are dropped.  Rankings are never re-sorted client-side: what the service
// sent is what gets displayed.

import { RawRecommendResponse, RecommendationItem } from "./api.js";

export interface HistoryEntry {
  state: string[];
  chosen: string;
  wasTopRecommendation: boolean;
}

export interface RecommendRequestDescriptor {
  seq: number;
  remaining: string[];
}

export interface SessionOptions {
  caseId?: string;
  k?: number;
  now?: () => Date;
}

const CSV_HEADER = "case_id,activity,timestamp,status";

function csvField(value: string): string {
  if (/[",\n\r]/.test(value)) {
    return `"${value.replace(/"/g, '""')}"`;
  }
  return value;
}

export class Session {
  readonly caseId: string;
  readonly k: number;
  readonly vocabulary: string[];
  prefix: string[] = [];
  pool: string[];
  latest: RawRecommendResponse | null = null;
  history: HistoryEntry[] = [];

  private issuedSeq = 0;
  private stepTimes: Date[] = [];
  private readonly now: () => Date;

  constructor(vocabulary: string[], options: SessionOptions = {}) {
    this.vocabulary = [...vocabulary];
    this.pool = [...vocabulary];
    this.caseId = options.caseId ?? `session-${Date.now()}`;
    this.k = options.k ?? vocabulary.length;
    this.now = options.now ?? (() => new Date());
  }

  /** Request descriptor for the current pool (used once after loading). */
  requestInitial(): RecommendRequestDescriptor {
    this.issuedSeq += 1;
    return { seq: this.issuedSeq, remaining: [...this.pool] };
  }

  /**
   * Record a choice: move it from the pool to the prefix, note whether the
   * analyst followed the top recommendation, and return the follow-up
   * request descriptor (null once the pool is exhausted).
   */
  beginStep(choice: string): RecommendRequestDescriptor | null {
    const index = this.pool.indexOf(choice);
    if (index < 0) {
      throw new Error(`activity ${JSON.stringify(choice)} is not in the candidate pool`);
    }
    const top = this.latest?.parsed.recommendations[0]?.activity;
    this.history.push({
      state: [...this.pool],
      chosen: choice,
      wasTopRecommendation: top !== undefined && choice === top,
    });
    this.pool.splice(index, 1);
    this.prefix.push(choice);
    this.stepTimes.push(this.now());
    if (this.isTerminal()) {
      return null;
    }
    this.issuedSeq += 1;
    return { seq: this.issuedSeq, remaining: [...this.pool] };
  }

  /** Apply a response body; answers false for stale (superseded) responses. */
  applyRecommendation(seq: number, response: RawRecommendResponse): boolean {
    if (seq !== this.issuedSeq) {
      return false;
    }
    this.latest = response;
    return true;
  }

  /** Exactly the service's ranking — same objects, same order. */
  displayedRankings(): RecommendationItem[] {
    return this.latest ? this.latest.parsed.recommendations : [];
  }

  isTerminal(): boolean {
    return this.pool.length === 0;
  }

  canExport(): boolean {
    return this.prefix.length > 0;
  }

  /** The constructed trace in the canonical event-log CSV format. */
  exportCsv(): string {
    if (!this.canExport()) {
      throw new Error("nothing to export: the prefix is empty");
    }
    const lines = [CSV_HEADER];
    this.prefix.forEach((activity, i) => {
      const stamp = (this.stepTimes[i] ?? this.now()).toISOString();
      lines.push(
        [csvField(this.caseId), csvField(activity), stamp, "Neutral"].join(",")
      );
    });
    return lines.join("\n") + "\n";
  }
}
