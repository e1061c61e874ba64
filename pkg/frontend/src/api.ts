// Typed client for the washy HTTP API. The UI owns nothing but the base URL
// and the bearer token; every rendered fact originates from these responses.

export interface ApiConfig {
  baseUrl: string;
  token: string;
  fetchFn?: typeof fetch;
}

export interface ChatReply {
  reply: string;
  reply_class: string | null;
  sentiment: string | null;
  persona: string;
  tool_calls: string[];
}

export interface Slot {
  id: string;
  slot_start_utc: string;
  slot_start_local: string;
  duration_minutes: number;
  lead_minutes: number;
  state: string;
  quality: string;
}

export interface SlotsResponse {
  active: Slot[];
  recently_expired: Slot[];
}

export interface NotificationEvent {
  id: string;
  reminder_id: string;
  fires_at: string;
  acknowledged: boolean;
  reminder: Slot | null;
}

export interface Account {
  id: string;
  display_name: string;
  timezone: string;
  persona: string;
}

export interface DeviceStatus {
  plug_on: boolean;
  program_latched: boolean;
  running: boolean;
  last_change: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class WashyApi {
  private readonly fetchFn: typeof fetch;

  constructor(private readonly cfg: ApiConfig) {
    this.fetchFn = cfg.fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.cfg.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.cfg.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = response.statusText;
      try {
        const envelope = (await response.json()) as { code?: string; message?: string };
        code = envelope.code ?? code;
        message = envelope.message ?? message;
      } catch {
        // non-JSON error body; keep the defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  chat(message: string): Promise<ChatReply> {
    return this.request<ChatReply>("POST", "/chat", { message });
  }

  slots(): Promise<SlotsResponse> {
    return this.request<SlotsResponse>("GET", "/slots");
  }

  confirmReminder(id: string): Promise<Slot> {
    return this.request<Slot>("POST", `/reminders/${id}/confirm`);
  }

  cancelReminder(id: string): Promise<Slot> {
    return this.request<Slot>("POST", `/reminders/${id}/cancel`);
  }

  poll(): Promise<{ events: NotificationEvent[] }> {
    return this.request<{ events: NotificationEvent[] }>("GET", "/notifications/poll");
  }

  ack(eventId: string): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>("POST", `/notifications/${eventId}/ack`);
  }

  account(): Promise<Account> {
    return this.request<Account>("GET", "/account");
  }

  device(): Promise<DeviceStatus> {
    return this.request<DeviceStatus>("GET", "/device");
  }
}
