import { describe, expect, it } from "vitest";

import { ApiError, WashyApi } from "../src/api.js";
import type { NotificationEvent, SlotsResponse } from "../src/api.js";
import { AppController } from "../src/controller.js";
import {
  account,
  chatCompliment,
  deviceOff,
  notificationEvent,
  scheduledSlot,
} from "./fixtures.js";

// In-memory stand-in for the service, exercised through the real WashyApi
// request path via a fetch stub.
class FakeService {
  slots: SlotsResponse = { active: [], recently_expired: [] };
  events: NotificationEvent[] = [];
  confirmed: string[] = [];
  cancelled: string[] = [];
  acked: string[] = [];
  failPoll = false;
  reject401 = false;

  fetchFn: typeof fetch = (async (input: any, init?: any) => {
    const url = new URL(String(input));
    const respond = (payload: unknown, status = 200) =>
      new Response(JSON.stringify(payload), { status });
    if (this.reject401) {
      return respond({ code: "unauthorized", message: "bad token", detail: null }, 401);
    }
    if (url.pathname === "/account") return respond(account);
    if (url.pathname === "/device") return respond(deviceOff);
    if (url.pathname === "/slots") return respond(this.slots);
    if (url.pathname === "/chat") {
      this.slots = { active: [scheduledSlot], recently_expired: [] };
      return respond(chatCompliment);
    }
    if (url.pathname === "/notifications/poll") {
      if (this.failPoll) return respond({ code: "boom", message: "down", detail: null }, 503);
      return respond({ events: this.events });
    }
    if (url.pathname.endsWith("/confirm")) {
      this.confirmed.push(url.pathname.split("/")[2]);
      return respond({ ...scheduledSlot, state: "Confirmed" });
    }
    if (url.pathname.endsWith("/cancel")) {
      this.cancelled.push(url.pathname.split("/")[2]);
      return respond({ ...scheduledSlot, state: "Cancelled" });
    }
    if (url.pathname.endsWith("/ack")) {
      this.acked.push(url.pathname.split("/")[2]);
      return respond({ ok: true });
    }
    return respond({ code: "not_found", message: "nope", detail: null }, 404);
  }) as typeof fetch;

  api(): WashyApi {
    return new WashyApi({ baseUrl: "http://svc", token: "t", fetchFn: this.fetchFn });
  }
}

describe("AppController", () => {
  it("refuses to send empty input", async () => {
    const app = new AppController(new FakeService().api());
    expect(app.canSend("  ")).toBe(false);
    await expect(app.sendChat("   ")).rejects.toThrow(/empty/);
  });

  it("a booking message adds bubbles and refreshes the slots pane", async () => {
    const service = new FakeService();
    const slotRenders: number[] = [];
    const app = new AppController(service.api(), {
      onSlots: (view) => slotRenders.push(view.active.length),
    });
    const bubble = await app.sendChat("Schedule a laundry lasting 1h at 11:30");
    expect(bubble.replyClass).toBe("compliment");
    expect(app.bubbles.map((b) => b.role)).toEqual(["user", "assistant"]);
    expect(slotRenders.at(-1)).toBe(1);
    expect(app.slotsView.active[0].localStart).toBe("2025-06-02 11:30");
  });

  it("poll surfaces the first event as a confirm form", async () => {
    const service = new FakeService();
    service.events = [notificationEvent];
    const forms: unknown[] = [];
    const app = new AppController(service.api(), { onForm: (f) => forms.push(f) });
    const delay = await app.pollOnce();
    expect(delay).toBe(5000);
    expect(app.form?.reminderId).toBe("r-0001");
    expect(forms).toHaveLength(1);
  });

  it("confirm submits the form, acks the event and clears it", async () => {
    const service = new FakeService();
    service.events = [notificationEvent];
    const app = new AppController(service.api());
    await app.pollOnce();
    await app.confirmForm();
    expect(service.confirmed).toEqual(["r-0001"]);
    expect(service.acked).toEqual(["e-0001"]);
    expect(app.form).toBeNull();
  });

  it("cancel follows the same path through the cancel endpoint", async () => {
    const service = new FakeService();
    service.events = [notificationEvent];
    const app = new AppController(service.api());
    await app.pollOnce();
    await app.cancelForm();
    expect(service.cancelled).toEqual(["r-0001"]);
    expect(service.acked).toEqual(["e-0001"]);
  });

  it("poll failures back off and recover", async () => {
    const service = new FakeService();
    service.failPoll = true;
    const app = new AppController(service.api());
    expect(await app.pollOnce()).toBe(10000);
    expect(await app.pollOnce()).toBe(20000);
    service.failPoll = false;
    expect(await app.pollOnce()).toBe(5000);
  });

  it("a 401 anywhere raises the re-auth prompt", async () => {
    const service = new FakeService();
    service.reject401 = true;
    let prompted = 0;
    const app = new AppController(service.api(), { onAuthError: () => (prompted += 1) });
    const err = await app.init().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(prompted).toBe(1);
  });
});
