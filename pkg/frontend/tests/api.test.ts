import { describe, expect, it } from "vitest";

import { ApiError, WashyApi } from "../src/api.js";
import { chatCompliment, slotsResponse } from "./fixtures.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body?: string;
}

function fakeFetch(status: number, payload: unknown, log: Recorded[]): typeof fetch {
  return (async (input: any, init?: any) => {
    log.push({
      url: String(input),
      method: init?.method ?? "GET",
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body as string | undefined,
    });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
}

function makeApi(status: number, payload: unknown) {
  const log: Recorded[] = [];
  const api = new WashyApi({
    baseUrl: "http://svc",
    token: "tok-1",
    fetchFn: fakeFetch(status, payload, log),
  });
  return { api, log };
}

describe("WashyApi", () => {
  it("sends the bearer token and JSON body on chat", async () => {
    const { api, log } = makeApi(200, chatCompliment);
    const reply = await api.chat("Schedule a laundry lasting 1h at 11:30");
    expect(reply).toEqual(chatCompliment);
    expect(log[0].url).toBe("http://svc/chat");
    expect(log[0].method).toBe("POST");
    expect(log[0].headers.Authorization).toBe("Bearer tok-1");
    expect(JSON.parse(log[0].body!)).toEqual({ message: "Schedule a laundry lasting 1h at 11:30" });
  });

  it("fetches slots verbatim", async () => {
    const { api, log } = makeApi(200, slotsResponse);
    const slots = await api.slots();
    expect(slots).toEqual(slotsResponse);
    expect(log[0].url).toBe("http://svc/slots");
    expect(log[0].method).toBe("GET");
  });

  it("hits the confirm, cancel and ack endpoints by id", async () => {
    const { api, log } = makeApi(200, { ok: true });
    await api.confirmReminder("r-0001");
    await api.cancelReminder("r-0002");
    await api.ack("e-0001");
    expect(log.map((r) => r.url)).toEqual([
      "http://svc/reminders/r-0001/confirm",
      "http://svc/reminders/r-0002/cancel",
      "http://svc/notifications/e-0001/ack",
    ]);
    expect(log.every((r) => r.method === "POST")).toBe(true);
  });

  it("unwraps the error envelope into an ApiError", async () => {
    const { api } = makeApi(401, {
      code: "unauthorized",
      message: "unknown or missing bearer token",
      detail: null,
    });
    const err = await api.slots().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(401);
    expect(err.code).toBe("unauthorized");
    expect(err.message).toContain("bearer token");
  });

  it("survives non-JSON error bodies", async () => {
    const log: Recorded[] = [];
    const api = new WashyApi({
      baseUrl: "http://svc",
      token: "t",
      fetchFn: (async (input: any, init?: any) => {
        log.push({ url: String(input), method: init?.method ?? "GET", headers: {} });
        return new Response("gateway exploded", { status: 502 });
      }) as typeof fetch,
    });
    const err = await api.device().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(502);
    expect(err.code).toBe("http_502");
  });
});
