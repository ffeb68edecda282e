/**
 * HTTP contract suite: the client hits exactly the documented routes with
 * exactly the documented bodies, surfaces the error envelope, and serializes
 * writes so the service's single-writer lock never sees concurrent edits.
 */

import { describe, expect, it } from "vitest";

import { ApiError, SessionClient } from "../src/api.js";
import { makeImage, tinyRuleset, sampleReport } from "./helpers/fixtures.js";
import { MockServer } from "./helpers/mockServer.js";

function makeMock() {
  return new MockServer({
    classes: ["kitchen", "office"],
    ruleset: tinyRuleset(),
    images: [
      { image: makeImage("img_a", ["tiled"]), state: { status: "manual", label: "kitchen" } },
      { image: makeImage("img_b", ["carpet"]) },
      { image: makeImage("img_c", []) },
    ],
    suggestions: { image_ids: ["img_c"], scores: { img_c: 1.5 }, generation: 1 },
    report: sampleReport(),
    importanceRanked: ["kettle", "monitor"],
    iteration: 2,
  });
}

describe("route shapes", () => {
  it("creates sessions via POST /sessions", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock/", mock.fetch);
    const created = await client.createSession({ path: "/data/ds.json", strict: true });
    expect(created.session_id).toBe(mock.sessionId);
    expect(mock.requests[0]).toEqual({
      method: "POST",
      path: "/sessions",
      body: { path: "/data/ds.json", strict: true },
    });
  });

  it("passes gallery filters as query parameters", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const page = await client.listImages(mock.sessionId, {
      status: "manual",
      page: 1,
      page_size: 10,
      sort: "id",
    });
    expect(mock.requests[0]!.path).toBe(
      `/sessions/${mock.sessionId}/images?status=manual&page=1&page_size=10&sort=id`,
    );
    expect(page.total).toBe(1);
    expect(page.items[0]!.image.id).toBe("img_a");
    expect(page.items[0]!.label_state.label).toBe("kitchen");
  });

  it("sorts suggested images first when asked", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const page = await client.listImages(mock.sessionId, { sort: "suggested" });
    expect(page.items.map((i) => i.image.id)).toEqual(["img_c", "img_a", "img_b"]);
    expect(page.items[0]!.suggested).toBe(true);
  });

  it("labels round-trip through PUT and DELETE", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const put = await client.setLabel(mock.sessionId, "img_b", "office");
    expect(put.label_state).toMatchObject({ image_id: "img_b", status: "manual", label: "office" });
    expect(put.progress.manual).toBe(2);

    const del = await client.clearLabel(mock.sessionId, "img_b");
    expect(del.label_state.status).toBe("unlabeled");
    expect(mock.requests.map((r) => r.method)).toEqual(["PUT", "DELETE"]);
    expect(mock.requests[0]!.body).toEqual({ label: "office" });
  });

  it("labeling an image drops it from the suggestion set", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    await client.setLabel(mock.sessionId, "img_c", "office");
    const suggestions = await client.getSuggestions(mock.sessionId);
    expect(suggestions.image_ids).not.toContain("img_c");
  });

  it("autolabel advances the rule generation", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const before = await client.getRules(mock.sessionId);
    const result = await client.autolabel(mock.sessionId);
    expect(result.generation).toBe(before.generation + 1);
    expect(result.report!.overall).toBeCloseTo(0.74);
    expect(mock.requests[1]!.body).toEqual({});
  });

  it("stats carry the donut, progress, report, and iteration", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const stats = await client.getStats(mock.sessionId);
    expect(stats.iteration).toBe(2);
    expect(Object.keys(stats.donut).sort()).toEqual(["kitchen", "office"]);
    expect(stats.progress.total).toBe(3);
    expect(stats.progress.fractions.manual).toBeCloseTo(1 / 3);
  });

  it("importance exposes the ranked dropdown order", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const imp = await client.getImportance(mock.sessionId);
    expect(imp.ranked).toEqual(["kettle", "monitor"]);
  });

  it("export returns the summary", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const summary = await client.exportSession(mock.sessionId, "/tmp/out.json");
    expect(summary).toMatchObject({ path: "/tmp/out.json", manual: 1 });
    expect(mock.requests[0]!.body).toEqual({ path: "/tmp/out.json" });
  });
});

describe("error envelope", () => {
  it("maps 400 unknown_class", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    await expect(client.setLabel(mock.sessionId, "img_a", "garage")).rejects.toMatchObject({
      status: 400,
      code: "unknown_class",
    });
  });

  it("maps 404 unknown_image and unknown_session", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    await expect(client.setLabel(mock.sessionId, "nope", "kitchen")).rejects.toMatchObject({
      status: 404,
      code: "unknown_image",
    });
    await expect(client.getRules("missing-session")).rejects.toMatchObject({
      status: 404,
      code: "unknown_session",
    });
  });

  it("keeps ApiError an Error with the service message", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    const failure = await client.setLabel(mock.sessionId, "img_a", "garage").catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.message).toContain("garage");
  });
});

describe("write serialization", () => {
  it("holds the second write until the first completes", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);

    let release!: () => void;
    mock.gate = new Promise((resolve) => {
      release = resolve;
    });

    const first = client.setLabel(mock.sessionId, "img_b", "office");
    const second = client.setLabel(mock.sessionId, "img_c", "kitchen");
    await new Promise((r) => setTimeout(r, 0));
    // only the gated first request has been issued so far
    expect(mock.requests).toHaveLength(1);

    mock.gate = null;
    release();
    await Promise.all([first, second]);
    expect(mock.requests.map((r) => r.path.split("/").pop())).toEqual(["img_b", "img_c"]);
  });

  it("a failed write does not wedge the queue", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    await expect(client.setLabel(mock.sessionId, "img_b", "garage")).rejects.toBeInstanceOf(
      ApiError,
    );
    const ok = await client.setLabel(mock.sessionId, "img_b", "office");
    expect(ok.label_state.label).toBe("office");
  });

  it("reads are not queued behind writes", async () => {
    const mock = makeMock();
    const client = new SessionClient("http://mock", mock.fetch);
    let release!: () => void;
    mock.gate = new Promise((resolve) => {
      release = resolve;
    });
    const write = client.setLabel(mock.sessionId, "img_b", "office");
    const rules = await client.getRules(mock.sessionId);
    // the read completed while the write was still held open
    expect(rules.rules).toHaveLength(2);
    expect(mock.requests).toHaveLength(2);
    mock.gate = null;
    release();
    await write;
  });
});
