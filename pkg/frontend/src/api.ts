// Typed client for the tollgate service API. The portal holds no business
// logic: every displayed value comes back from these calls untouched.

export interface ApiFailure {
  status: number;
  code: string;
  message: string;
}

export function isApiFailure(e: unknown): e is ApiFailure {
  return typeof e === "object" && e !== null && "status" in e && "code" in e;
}

export interface SessionInfo {
  token: string;
  principal: string;
  role: "user" | "admin";
}

export interface OwnerView {
  owner_id: string;
  email: string;
  balance: number;
  payment_methods: string[];
}

export interface NotificationView {
  notif_id: string;
  kind: string;
  body: string;
  state: string;
  idempotency_key: string;
}

export interface TransactionView {
  tx_id: string;
  plaza_id: string;
  amount: number;
  kind: string;
  timestamp: number;
}

export interface VehicleView {
  vehicle_id: string;
  plate: string;
  display: string;
  tag: { tag_id: string; state: string } | null;
  status: string;
  last_seen: { plaza_id: string; timestamp: number } | null;
  alerts?: { alert_id: string; plaza_id: string; timestamp: number }[];
}

export interface InvoiceView {
  invoice_id: string;
  owner_id: string;
  plate: string;
  amount: number;
  issued_at: number;
  deadline: number;
  state: string;
}

export interface ReportView {
  report_id: string;
  vehicle_id: string;
  reported_at: number;
  state: string;
  admin_response: string | null;
}

export interface ReportsPage {
  total: number;
  reports: ReportView[];
}

type Fetch = typeof globalThis.fetch;

export class TollgateApi {
  token: string | null = null;
  role: "user" | "admin" | null = null;
  principal: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: Fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw { status: 0, code: "network", message: String(err) } satisfies ApiFailure;
    }
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw {
        status: response.status,
        code: payload.code ?? "error",
        message: payload.message ?? response.statusText,
      } satisfies ApiFailure;
    }
    return payload as T;
  }

  // -- sessions ---------------------------------------------------------

  async register(email: string, password: string): Promise<OwnerView> {
    return this.request("POST", "/api/users", { email, password });
  }

  async login(email: string, password: string): Promise<SessionInfo> {
    const session = await this.request<SessionInfo>("POST", "/api/auth/login", {
      email,
      password,
    });
    this.token = session.token;
    this.role = session.role;
    this.principal = session.principal;
    return session;
  }

  logout(): void {
    this.token = null;
    this.role = null;
    this.principal = null;
  }

  async changePassword(oldPassword: string, newPassword: string): Promise<void> {
    await this.request("POST", "/api/auth/change-password", {
      old_password: oldPassword,
      new_password: newPassword,
    });
  }

  async recover(email: string): Promise<void> {
    await this.request("POST", "/api/auth/recover", { email });
  }

  async recoverConfirm(token: string, newPassword: string): Promise<void> {
    await this.request("POST", "/api/auth/recover/confirm", {
      token,
      new_password: newPassword,
    });
  }

  // -- owner ---------------------------------------------------------

  self(): Promise<OwnerView> {
    return this.request("GET", "/api/users/self");
  }

  updateSelf(email: string): Promise<OwnerView> {
    return this.request("PATCH", "/api/users/self", { email });
  }

  addPaymentMethod(method: string): Promise<OwnerView> {
    return this.request("POST", "/api/payment-methods", { method });
  }

  notifications(): Promise<NotificationView[]> {
    return this.request("GET", "/api/notifications");
  }

  transactions(limit = 50): Promise<TransactionView[]> {
    return this.request("GET", `/api/transactions?limit=${limit}`);
  }

  vehicles(): Promise<VehicleView[]> {
    return this.request("GET", "/api/vehicles");
  }

  registerVehicle(plate: string, tagId?: string): Promise<VehicleView> {
    return this.request("POST", "/api/vehicles", {
      plate,
      tag_id: tagId || null,
      tag_active: true,
    });
  }

  reportLoss(vehicleId: string): Promise<ReportView> {
    return this.request("POST", `/api/vehicles/${vehicleId}/report-loss`);
  }

  invoices(): Promise<InvoiceView[]> {
    return this.request("GET", "/api/invoices");
  }

  payInvoice(invoiceId: string): Promise<TransactionView> {
    return this.request("POST", `/api/invoices/${invoiceId}/pay`);
  }

  // -- admin ---------------------------------------------------------

  adminUsers(): Promise<OwnerView[]> {
    return this.request("GET", "/api/admin/users");
  }

  adminPatchUser(ownerId: string, patch: { email?: string; balance?: number }): Promise<OwnerView> {
    return this.request("PATCH", `/api/admin/users/${ownerId}`, patch);
  }

  async adminDeleteUser(ownerId: string): Promise<void> {
    await this.request("DELETE", `/api/admin/users/${ownerId}`);
  }

  adminReports(): Promise<ReportsPage> {
    return this.request("GET", "/api/admin/reports");
  }

  adminRespond(reportId: string, response: string): Promise<ReportView> {
    return this.request("POST", `/api/admin/reports/${reportId}/respond`, { response });
  }

  adminTrack(vehicleId: string): Promise<VehicleView> {
    return this.request("GET", `/api/admin/vehicles/${vehicleId}/track`);
  }
}
