// DOM-free application controller: the three views (chat, slots,
// notification form) as operations over the API client, with render
// callbacks the browser glue subscribes to. Tests drive this directly.

import { ApiError, WashyApi } from "./api.js";
import type { Account, DeviceStatus } from "./api.js";
import {
  bubbleForReply,
  canSend,
  errorBubble,
  formForEvent,
  nextPollDelay,
  toSlotsView,
  userBubble,
} from "./model.js";
import type { ChatBubble, NotificationForm, SlotsView } from "./model.js";

export interface ControllerEvents {
  onTranscript?(bubbles: ChatBubble[]): void;
  onSlots?(view: SlotsView): void;
  onForm?(form: NotificationForm | null): void;
  onDevice?(status: DeviceStatus): void;
  onAccount?(account: Account): void;
  onAuthError?(): void;
}

export class AppController {
  readonly bubbles: ChatBubble[] = [];
  form: NotificationForm | null = null;
  slotsView: SlotsView = { active: [], recentlyExpired: [] };
  private pollFailures = 0;

  constructor(
    private readonly api: WashyApi,
    private readonly events: ControllerEvents = {},
  ) {}

  private guard<T>(promise: Promise<T>): Promise<T> {
    return promise.catch((err) => {
      if (err instanceof ApiError && err.status === 401) {
        this.events.onAuthError?.();
      }
      throw err;
    });
  }

  async init(): Promise<void> {
    const account = await this.guard(this.api.account());
    this.events.onAccount?.(account);
    await this.refreshSlots();
    await this.refreshDevice();
  }

  canSend(text: string): boolean {
    return canSend(text);
  }

  async sendChat(text: string): Promise<ChatBubble> {
    if (!this.canSend(text)) {
      throw new Error("refusing to send an empty message");
    }
    this.bubbles.push(userBubble(text));
    this.events.onTranscript?.(this.bubbles);
    let bubble: ChatBubble;
    try {
      const reply = await this.guard(this.api.chat(text));
      bubble = bubbleForReply(reply);
    } catch (err) {
      bubble = errorBubble(err instanceof ApiError ? err.message : String(err));
      this.bubbles.push(bubble);
      this.events.onTranscript?.(this.bubbles);
      throw err;
    }
    this.bubbles.push(bubble);
    this.events.onTranscript?.(this.bubbles);
    await this.refreshSlots(); // a booking reply changes the slots page
    return bubble;
  }

  async refreshSlots(): Promise<SlotsView> {
    const slots = await this.guard(this.api.slots());
    this.slotsView = toSlotsView(slots.active, slots.recently_expired);
    this.events.onSlots?.(this.slotsView);
    return this.slotsView;
  }

  async refreshDevice(): Promise<DeviceStatus> {
    const status = await this.guard(this.api.device());
    this.events.onDevice?.(status);
    return status;
  }

  // One poll round; returns the delay until the next one (5 s cadence,
  // exponential backoff while the service is unreachable).
  async pollOnce(): Promise<number> {
    try {
      const { events } = await this.guard(this.api.poll());
      this.pollFailures = 0;
      if (this.form === null) {
        for (const event of events) {
          const form = formForEvent(event);
          if (form !== null) {
            this.form = form;
            this.events.onForm?.(form);
            break;
          }
        }
      }
    } catch {
      this.pollFailures += 1;
    }
    return nextPollDelay(this.pollFailures);
  }

  async confirmForm(): Promise<void> {
    if (this.form === null) throw new Error("no notification form to confirm");
    const { reminderId, eventId } = this.form;
    await this.guard(this.api.confirmReminder(reminderId));
    await this.guard(this.api.ack(eventId));
    this.form = null;
    this.events.onForm?.(null);
    await this.refreshSlots();
  }

  async cancelForm(): Promise<void> {
    if (this.form === null) throw new Error("no notification form to cancel");
    const { reminderId, eventId } = this.form;
    await this.guard(this.api.cancelReminder(reminderId));
    await this.guard(this.api.ack(eventId));
    this.form = null;
    this.events.onForm?.(null);
    await this.refreshSlots();
  }
}
