// Typed client for the REST surface. Every number the UI shows comes out of
// these response shapes; nothing is counted client-side.

export interface OptionInfo {
  option_id: string;
  label: string;
}

export interface QuestionView {
  question_id: string;
  revision: number;
  text: string;
  kind: "single" | "multiple";
  options: OptionInfo[];
}

export interface GroupView {
  group_id: string;
  title: string;
  state: "unlocked" | "locked";
  visibility: "protected" | "public";
  items: { question_id: string; revision: number }[];
}

export interface WindowView {
  window_id: string;
  group_id: string;
  opened_at: string;
  duration_s: number | null;
  deadline: string | null;
  state: "open" | "closed";
  closed_at: string | null;
  published: boolean;
  join_code?: string;
}

export interface WindowStatus {
  state: "open" | "closed";
  remaining_s: number | null;
  respondent_count: number;
}

export interface OptionStats {
  option_id: string;
  label: string;
  count: number;
  fraction: number;
  fraction_exact: string;
}

export interface QuestionStats {
  question_id: string;
  revision: number;
  text: string;
  kind: "single" | "multiple";
  respondent_count: number;
  options: OptionStats[];
}

export interface StatsPayload {
  questions: QuestionStats[];
  version?: number;
  final?: boolean;
}

export interface SubmitReceipt {
  receipt_id: string;
  window_id: string;
  question_id: string;
  received_at: string;
  accepted: boolean;
  replaced_prior: boolean;
}

export interface ApiError {
  error: string;
  detail?: unknown;
}

export class RequestFailed extends Error {
  constructor(public status: number, public body: ApiError) {
    super(`${body.error} (http ${status})`);
  }
}

async function request<T>(path: string, init: RequestInit = {}): Promise<T> {
  const res = await fetch(path, init);
  const body = await res.json();
  if (!res.ok) {
    throw new RequestFailed(res.status, body as ApiError);
  }
  return body as T;
}

function jsonInit(method: string, payload: unknown, session?: string): RequestInit {
  const headers: Record<string, string> = { "content-type": "application/json" };
  if (session) headers["authorization"] = `Bearer ${session}`;
  return { method, headers, body: JSON.stringify(payload) };
}

export class TeacherApi {
  constructor(private session: string) {}

  static async login(password: string): Promise<TeacherApi> {
    const res = await request<{ token: string }>(
      "/api/auth/login", jsonInit("POST", { password }));
    return new TeacherApi(res.token);
  }

  private get authed(): RequestInit {
    return { headers: { authorization: `Bearer ${this.session}` } };
  }

  listQuestions(): Promise<{ questions: QuestionView[] }> {
    return request("/api/questions", this.authed);
  }

  createQuestion(text: string, kind: string, options: string[]): Promise<QuestionView> {
    return request("/api/questions", jsonInit("POST", { text, kind, options }, this.session));
  }

  composeGroup(title: string, questionIds: string[], visibility: string): Promise<GroupView> {
    return request("/api/groups",
      jsonInit("POST", { title, question_ids: questionIds, visibility }, this.session));
  }

  setGroupState(groupId: string, state: "locked" | "unlocked"): Promise<GroupView> {
    return request(`/api/groups/${groupId}/state`, jsonInit("POST", { state }, this.session));
  }

  openWindow(groupId: string, durationS: number | null): Promise<WindowView> {
    return request(`/api/groups/${groupId}/windows`,
      jsonInit("POST", { duration_s: durationS }, this.session));
  }

  closeWindow(windowId: string): Promise<unknown> {
    return request(`/api/windows/${windowId}/close`, { method: "POST", ...this.authed });
  }

  publish(windowId: string): Promise<WindowView> {
    return request(`/api/windows/${windowId}/publish`, { method: "POST", ...this.authed });
  }

  stats(windowId: string, includeLive = true): Promise<StatsPayload> {
    return request(
      `/api/windows/${windowId}/stats?include_live=${includeLive}&session=${this.session}`);
  }

  pollStats(windowId: string, afterVersion: number, timeoutMs: number): Promise<StatsPayload> {
    return request(
      `/api/windows/${windowId}/stats?include_live=true&wait_version=${afterVersion}` +
      `&timeout_ms=${timeoutMs}&session=${this.session}`);
  }

  streamUrl(windowId: string): string {
    return `/api/windows/${windowId}/stats/stream?session=${this.session}`;
  }
}

export class PadApi {
  constructor(public windowId: string, private token: string) {}

  static async join(windowId: string, joinCode?: string): Promise<PadApi> {
    const res = await request<{ token: string }>(
      `/api/windows/${windowId}/token`, jsonInit("POST", { join_code: joinCode ?? null }));
    return new PadApi(windowId, res.token);
  }

  view(): Promise<{ window: WindowView; group: { title: string }; questions: QuestionView[] }> {
    return request(`/api/windows/${this.windowId}/view?token=${this.token}`);
  }

  status(): Promise<WindowStatus> {
    return request(`/api/windows/${this.windowId}/status`);
  }

  submit(questionId: string, selected: string[], idempotencyKey: string): Promise<SubmitReceipt> {
    return request(`/api/windows/${this.windowId}/submit`, jsonInit("POST", {
      participant_token: this.token,
      question_id: questionId,
      selected_options: selected,
      idempotency_key: idempotencyKey,
    }));
  }

  results(): Promise<StatsPayload> {
    return request(`/api/windows/${this.windowId}/results?token=${this.token}`);
  }
}
