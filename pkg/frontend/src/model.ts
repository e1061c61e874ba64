// Pure view-model layer: everything here is a stateless projection of API
// responses. The UI never does timezone math — local times are rendered
// server-side and copied through verbatim.

import type { ChatReply, NotificationEvent, Slot } from "./api.js";

export interface ViewSlot {
  id: string;
  localStart: string;
  durationMinutes: number;
  stateBadge: string;
  qualityBadge: string;
}

export function toViewSlot(slot: Slot): ViewSlot {
  return {
    id: slot.id,
    localStart: slot.slot_start_local,
    durationMinutes: slot.duration_minutes,
    stateBadge: slot.state,
    qualityBadge: slot.quality,
  };
}

export interface SlotsView {
  active: ViewSlot[];
  recentlyExpired: ViewSlot[];
}

export function toSlotsView(active: Slot[], recentlyExpired: Slot[]): SlotsView {
  return {
    active: active.map(toViewSlot),
    recentlyExpired: recentlyExpired.map(toViewSlot),
  };
}

export interface ChatBubble {
  role: "user" | "assistant" | "error";
  text: string;
  replyClass: string | null;
  sentiment: string | null;
}

export function userBubble(text: string): ChatBubble {
  return { role: "user", text, replyClass: null, sentiment: null };
}

export function bubbleForReply(reply: ChatReply): ChatBubble {
  return {
    role: "assistant",
    text: reply.reply,
    replyClass: reply.reply_class,
    sentiment: reply.sentiment,
  };
}

export function errorBubble(message: string): ChatBubble {
  return { role: "error", text: message, replyClass: "error", sentiment: null };
}

// The confirm/cancel form shown when a notification arrives.
export interface NotificationForm {
  eventId: string;
  reminderId: string;
  localStart: string;
  durationMinutes: number;
}

export function formForEvent(event: NotificationEvent): NotificationForm | null {
  if (event.reminder === null) return null;
  return {
    eventId: event.id,
    reminderId: event.reminder_id,
    localStart: event.reminder.slot_start_local,
    durationMinutes: event.reminder.duration_minutes,
  };
}

export function canSend(text: string): boolean {
  return text.trim().length > 0;
}

// Poll cadence: 5 s baseline, doubling on consecutive failures, capped at 60 s.
export const POLL_BASE_MS = 5000;
export const POLL_MAX_MS = 60000;

export function nextPollDelay(consecutiveFailures: number): number {
  if (consecutiveFailures <= 0) return POLL_BASE_MS;
  return Math.min(POLL_BASE_MS * 2 ** consecutiveFailures, POLL_MAX_MS);
}
