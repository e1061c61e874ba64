// Recorded API responses, captured from a live service instance
// (virtual clock 2025-06-02T09:13Z, user in Europe/Rome).

import type {
  Account,
  ChatReply,
  DeviceStatus,
  NotificationEvent,
  Slot,
  SlotsResponse,
} from "../src/api.js";

export const chatCompliment: ChatReply = {
  reply:
    "Great choice! **2025-06-02 11:30** is a good slot (2812.5 Wh, it exceeds the required energy). Your laundry notification is set.",
  reply_class: "compliment",
  sentiment: "neutral",
  persona: "traditional",
  tool_calls: ["get_timewindows", "schedule_notification"],
};

export const chatRegret: ChatReply = {
  reply:
    "Alright, I have set the notification for **2025-06-02 22:00** even though it is a bad slot (0 Wh, it does not cover the required energy). I would still recommend a sunnier time.",
  reply_class: "regret",
  sentiment: "neutral",
  persona: "traditional",
  tool_calls: ["schedule_notification"],
};

export const scheduledSlot: Slot = {
  id: "r-0001",
  slot_start_utc: "2025-06-02T09:30:00+00:00",
  slot_start_local: "2025-06-02 11:30",
  duration_minutes: 60.0,
  lead_minutes: 10,
  state: "Scheduled",
  quality: "Good",
};

export const startedSlot: Slot = {
  ...scheduledSlot,
  id: "r-0002",
  slot_start_utc: "2025-06-02T08:00:00+00:00",
  slot_start_local: "2025-06-02 10:00",
  state: "Started",
};

export const slotsResponse: SlotsResponse = {
  active: [scheduledSlot],
  recently_expired: [startedSlot],
};

export const notificationEvent: NotificationEvent = {
  id: "e-0001",
  reminder_id: "r-0001",
  fires_at: "2025-06-02T09:20:00+00:00",
  acknowledged: false,
  reminder: { ...scheduledSlot, state: "Notified" },
};

export const account: Account = {
  id: "alice",
  display_name: "Alice",
  timezone: "Europe/Rome",
  persona: "personified",
};

export const deviceRunning: DeviceStatus = {
  plug_on: true,
  program_latched: true,
  running: true,
  last_change: "2025-06-02T09:30:00+00:00",
};

export const deviceOff: DeviceStatus = {
  plug_on: false,
  program_latched: true,
  running: false,
  last_change: "2025-06-02T09:13:00+00:00",
};
