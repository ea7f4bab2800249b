// Annotator session state machine. No DOM access: the page layer renders
// whatever state this module exposes, and tests drive it directly with an
// injected fetch. The server is authoritative — this module never stores
// anything beyond the current task and the in-flight selection.

export type Intent = "I" | "T" | "N";
export type Mode = "multi-intent" | "single-intent";

export const INTENTS: Intent[] = ["I", "T", "N"];

export interface Task {
  query_id: string;
  tokens: string[];
  mode: Mode;
}

export interface Progress {
  labeled: number;
  total: number;
  fully_annotated: number;
  gt2_count: number;
  gt3_count: number;
}

export type SessionState =
  | { kind: "idle" }
  | { kind: "annotating"; task: Task }
  | { kind: "done" }
  | { kind: "error"; message: string; retry: () => Promise<void> };

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class AnnotatorSession {
  readonly annotator: string;
  private readonly fetcher: FetchLike;
  private readonly base: string;
  private selected: Set<Intent> = new Set();
  private state_: SessionState = { kind: "idle" };

  constructor(annotator: string, fetcher: FetchLike, base = "") {
    if (!annotator) {
      throw new Error("annotator id is required");
    }
    this.annotator = annotator;
    this.fetcher = fetcher;
    this.base = base;
  }

  get state(): SessionState {
    return this.state_;
  }

  get task(): Task | null {
    return this.state_.kind === "annotating" ? this.state_.task : null;
  }

  get mode(): Mode | null {
    return this.task ? this.task.mode : null;
  }

  isSelected(intent: Intent): boolean {
    return this.selected.has(intent);
  }

  // Toggle an intent control. Single-intent tasks behave like radio
  // buttons: selecting one intent deselects the others, so the selection
  // can never hold two bits in that mode.
  toggle(intent: Intent): void {
    if (this.state_.kind !== "annotating") {
      return;
    }
    if (this.selected.has(intent)) {
      this.selected.delete(intent);
      return;
    }
    if (this.state_.task.mode === "single-intent") {
      this.selected.clear();
    }
    this.selected.add(intent);
  }

  // Bit triple in fixed I,T,N order, mirroring the control state exactly.
  bits(): [number, number, number] {
    return [
      this.selected.has("I") ? 1 : 0,
      this.selected.has("T") ? 1 : 0,
      this.selected.has("N") ? 1 : 0,
    ];
  }

  canSubmit(): boolean {
    return this.state_.kind === "annotating" && this.selected.size >= 1;
  }

  async start(): Promise<void> {
    await this.fetchNext();
  }

  async fetchNext(): Promise<void> {
    let res: Response;
    try {
      res = await this.fetcher(
        `${this.base}/api/task?annotator=${encodeURIComponent(this.annotator)}`,
      );
    } catch (err) {
      // network failure: selection (if any) is untouched, offer a retry
      this.state_ = {
        kind: "error",
        message: `network error: ${String(err)}`,
        retry: () => this.fetchNext(),
      };
      return;
    }
    if (!res.ok) {
      const detail = await safeDetail(res);
      this.state_ = {
        kind: "error",
        message: `task fetch failed (${res.status}): ${detail}`,
        retry: () => this.fetchNext(),
      };
      return;
    }
    const body = await res.json();
    if (body.done) {
      this.selected.clear();
      this.state_ = { kind: "done" };
      return;
    }
    this.selected.clear();
    this.state_ = { kind: "annotating", task: body as Task };
  }

  // Submit the current selection. On 200 the session advances to the next
  // task; on any failure the task and selection are kept so nothing the
  // annotator chose is lost. Returns the outcome for the page layer.
  async submit(): Promise<{ ok: boolean; message?: string }> {
    if (this.state_.kind !== "annotating") {
      return { ok: false, message: "no task to submit" };
    }
    if (!this.canSubmit()) {
      return { ok: false, message: "select at least one intent" };
    }
    const task = this.state_.task;
    const payload = {
      annotator: this.annotator,
      query_id: task.query_id,
      bits: this.bits(),
    };
    let res: Response;
    try {
      res = await this.fetcher(`${this.base}/api/label`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      });
    } catch (err) {
      return { ok: false, message: `network error: ${String(err)}` };
    }
    if (res.status === 409) {
      // someone (or a previous session) already labeled it: move on
      await this.fetchNext();
      return { ok: false, message: "already labeled; skipped to next" };
    }
    if (!res.ok) {
      return { ok: false, message: await safeDetail(res) };
    }
    await this.fetchNext();
    return { ok: true };
  }

  async progress(): Promise<Progress | null> {
    try {
      const res = await this.fetcher(`${this.base}/api/progress`);
      if (!res.ok) {
        return null;
      }
      return (await res.json()) as Progress;
    } catch {
      return null;
    }
  }
}

async function safeDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return res.statusText || `http ${res.status}`;
  }
}
