import { describe, it } from "node:test";
import assert from "node:assert/strict";

import { AnnotatorSession, Task } from "../src/session.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

// Scripted fake server: one task per annotator, records every label POST.
function fakeServer(tasks: Task[]) {
  const posts: Array<{ annotator: string; query_id: string; bits: number[] }> = [];
  let cursor = 0;
  const fetcher = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.startsWith("/api/task")) {
      if (cursor >= tasks.length) {
        return jsonResponse({ done: true });
      }
      return jsonResponse(tasks[cursor]);
    }
    if (url === "/api/label") {
      const body = JSON.parse(String(init?.body));
      posts.push(body);
      cursor += 1;
      return jsonResponse({ ok: true });
    }
    throw new Error(`unexpected url ${url}`);
  };
  return { fetcher, posts };
}

const MULTI_TASK: Task = { query_id: "q1", tokens: ["bank", "login"], mode: "multi-intent" };
const SINGLE_TASK: Task = { query_id: "q1", tokens: ["bank", "login"], mode: "single-intent" };

describe("AnnotatorSession", () => {
  it("requires an annotator id", () => {
    assert.throws(() => new AnnotatorSession("", async () => jsonResponse({})));
  });

  it("multi mode: selecting I and N submits bits [1,0,1]", async () => {
    const { fetcher, posts } = fakeServer([MULTI_TASK]);
    const session = new AnnotatorSession("ann1", fetcher);
    await session.start();
    session.toggle("I");
    session.toggle("N");
    assert.deepEqual(session.bits(), [1, 0, 1]);
    const outcome = await session.submit();
    assert.equal(outcome.ok, true);
    assert.deepEqual(posts, [{ annotator: "ann1", query_id: "q1", bits: [1, 0, 1] }]);
    assert.equal(session.state.kind, "done");
  });

  it("multi mode: toggling twice deselects", async () => {
    const { fetcher } = fakeServer([MULTI_TASK]);
    const session = new AnnotatorSession("ann1", fetcher);
    await session.start();
    session.toggle("T");
    session.toggle("T");
    assert.deepEqual(session.bits(), [0, 0, 0]);
    assert.equal(session.canSubmit(), false);
  });

  it("single mode can never hold two selected bits", async () => {
    const { fetcher, posts } = fakeServer([SINGLE_TASK]);
    const session = new AnnotatorSession("ann3", fetcher);
    await session.start();
    session.toggle("I");
    session.toggle("N"); // radio behavior: replaces, never adds
    assert.deepEqual(session.bits(), [0, 0, 1]);
    session.toggle("T");
    assert.deepEqual(session.bits(), [0, 1, 0]);
    assert.equal(session.bits().reduce((a, b) => a + b, 0), 1);
    await session.submit();
    assert.deepEqual(posts[0].bits, [0, 1, 0]);
  });

  it("refuses to submit an empty selection", async () => {
    const { fetcher, posts } = fakeServer([MULTI_TASK]);
    const session = new AnnotatorSession("ann1", fetcher);
    await session.start();
    const outcome = await session.submit();
    assert.equal(outcome.ok, false);
    assert.equal(posts.length, 0);
  });

  it("submitted bits always equal the rendered control state", async () => {
    const { fetcher, posts } = fakeServer([MULTI_TASK]);
    const session = new AnnotatorSession("ann1", fetcher);
    await session.start();
    session.toggle("I");
    session.toggle("T");
    session.toggle("I"); // changed their mind
    const before = session.bits();
    await session.submit();
    assert.deepEqual(posts[0].bits, before);
  });

  it("keeps the selection when the network fails", async () => {
    let fail = true;
    const { fetcher } = fakeServer([MULTI_TASK]);
    const flaky = async (url: string, init?: RequestInit) => {
      if (fail && url === "/api/label") {
        throw new Error("offline");
      }
      return fetcher(url, init);
    };
    const session = new AnnotatorSession("ann1", flaky);
    await session.start();
    session.toggle("N");
    const outcome = await session.submit();
    assert.equal(outcome.ok, false);
    assert.deepEqual(session.bits(), [0, 0, 1]); // nothing lost
    assert.equal(session.task?.query_id, "q1");
    fail = false;
    assert.equal((await session.submit()).ok, true);
  });

  it("a 409 conflict skips ahead instead of wedging", async () => {
    const tasks = [MULTI_TASK, { ...MULTI_TASK, query_id: "q2" }];
    let first = true;
    const fetcher = async (url: string): Promise<Response> => {
      if (url.startsWith("/api/task")) {
        if (first) {
          return jsonResponse(tasks[0]);
        }
        return jsonResponse(tasks[1]);
      }
      if (first) {
        first = false;
        return jsonResponse({ detail: "already labeled" }, 409);
      }
      return jsonResponse({ ok: true });
    };
    const session = new AnnotatorSession("ann1", fetcher);
    await session.start();
    session.toggle("I");
    const outcome = await session.submit();
    assert.equal(outcome.ok, false);
    assert.equal(session.task?.query_id, "q2");
  });

  it("surfaces a retry when the task fetch dies", async () => {
    let alive = false;
    const { fetcher } = fakeServer([MULTI_TASK]);
    const flaky = async (url: string, init?: RequestInit) => {
      if (!alive) {
        throw new Error("offline");
      }
      return fetcher(url, init);
    };
    const session = new AnnotatorSession("ann1", flaky);
    await session.start();
    assert.equal(session.state.kind, "error");
    alive = true;
    if (session.state.kind === "error") {
      await session.state.retry();
    }
    assert.equal(session.state.kind, "annotating");
  });

  it("reports progress and tolerates progress failures", async () => {
    const progress = { labeled: 3, total: 9, fully_annotated: 1, gt2_count: 1, gt3_count: 0 };
    const session = new AnnotatorSession("ann1", async (url) => {
      if (url === "/api/progress") {
        return jsonResponse(progress);
      }
      throw new Error("unexpected");
    });
    assert.deepEqual(await session.progress(), progress);
    const offline = new AnnotatorSession("ann1", async () => {
      throw new Error("offline");
    });
    assert.equal(await offline.progress(), null);
  });
});
