import { describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { LabelFlow } from "../src/labelFlow.js";
import { decisionForKey, subtypeForKey } from "../src/schema.js";
import { MockServer, demoItems } from "./mockServer.js";

function makeFlow(server: MockServer, session = "a1") {
  const client = new Client("http://mock", server.fetchFn());
  return new LabelFlow(client, session);
}

describe("keyboard bindings", () => {
  it("maps 1-5 to the five decisions in schema order", () => {
    expect(decisionForKey("1")).toBe("truly_insufficient");
    expect(decisionForKey("2")).toBe("actually_supported");
    expect(decisionForKey("3")).toBe("actually_contradicted");
    expect(decisionForKey("4")).toBe("ambiguous");
    expect(decisionForKey("5")).toBe("invalid_or_unreadable");
    expect(decisionForKey("6")).toBeUndefined();
  });

  it("maps 1-4 to subtypes", () => {
    expect(subtypeForKey("1")).toBe("broad_topic");
    expect(subtypeForKey("4")).toBe("topic_unrelated");
    expect(subtypeForKey("5")).toBeUndefined();
  });
});

describe("label flow", () => {
  it("starts at the first item", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const flow = makeFlow(server);
    await flow.start();
    const state = flow.current();
    expect(state.phase).toBe("labeling");
    expect(state.item?.item_id).toBe("item00");
    expect(state.total).toBe(10);
  });

  it("pressing 1 opens the subtype prompt instead of submitting", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const flow = makeFlow(server);
    await flow.start();
    await flow.handleKey("1");
    expect(flow.current().phase).toBe("subtype");
    expect(server.sessions.get("a1")!.size).toBe(0);
    await flow.handleKey("2"); // near_miss
    expect(server.sessions.get("a1")!.get("item00")).toEqual({
      decision: "truly_insufficient",
      subtype: "near_miss",
    });
    expect(flow.current().item?.item_id).toBe("item01");
  });

  it("non-insufficient decisions skip the subtype prompt", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const flow = makeFlow(server);
    await flow.start();
    await flow.handleKey("2");
    expect(server.sessions.get("a1")!.get("item00")).toEqual({
      decision: "actually_supported",
      subtype: undefined,
    });
    expect(flow.current().phase).toBe("labeling");
    expect(flow.current().item?.item_id).toBe("item01");
  });

  it("escape cancels the subtype prompt", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const flow = makeFlow(server);
    await flow.start();
    await flow.handleKey("1");
    await flow.handleKey("Escape");
    expect(flow.current().phase).toBe("labeling");
    expect(flow.current().item?.item_id).toBe("item00");
  });

  it("conflict surfaces a notice and advances", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    // another tab already labeled item00 in this session
    server.sessions.get("a1")!.set("item00", { decision: "ambiguous" });
    const flow = makeFlow(server);
    await flow.start(); // server cursor now points at item01
    expect(flow.current().item?.item_id).toBe("item01");
    // simulate the stale tab racing on item01: label it behind our back
    server.sessions.get("a1")!.set("item01", { decision: "ambiguous" });
    await flow.choose("actually_supported");
    const state = flow.current();
    expect(state.notice).toContain("already labeled");
    expect(state.item?.item_id).toBe("item02"); // advanced past the conflict
  });

  it("a rejected submission rolls back to the same item", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const flow = makeFlow(server);
    await flow.start();
    server.failNextSubmitWith = 400;
    await flow.choose("ambiguous");
    const state = flow.current();
    expect(state.notice).toContain("rejected");
    expect(state.item?.item_id).toBe("item00"); // server re-dispenses it
    expect(server.sessions.get("a1")!.size).toBe(0);
  });

  it("labeling all ten items reaches the done marker with full progress", async () => {
    const server = new MockServer("pkt-demo", demoItems(10));
    const flow = makeFlow(server);
    await flow.start();
    for (let i = 0; i < 10; i++) {
      await flow.choose("truly_insufficient");
      await flow.chooseSubtype("partial");
    }
    const state = flow.current();
    expect(state.phase).toBe("done");
    expect(state.completed).toBe(10);
    expect(state.total).toBe(10);
    expect(server.sessions.get("a1")!.size).toBe(10);
  });

  it("a fresh flow resumes at the server cursor (refresh mid-packet)", async () => {
    const server = new MockServer("pkt-demo", demoItems());
    const first = makeFlow(server);
    await first.start();
    await first.choose("ambiguous");
    await first.choose("ambiguous");
    const resumed = makeFlow(server);
    await resumed.start();
    expect(resumed.current().item?.item_id).toBe("item02");
  });
});
