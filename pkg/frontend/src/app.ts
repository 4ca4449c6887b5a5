// Hash-routed single-page portal. Pages are re-rendered from API responses on
// every navigation (reloading reproduces everything from the server), actions
// re-fetch rather than patching state locally, and a request sequence number
// makes the last response win when navigations race.

import { TollgateApi, isApiFailure } from "./api.js";
import * as views from "./views.js";

export interface AppOptions {
  pollMs?: number; // notification polling; 0 disables
}

const PUBLIC_PAGES = new Set(["#/login", "#/register", "#/recover"]);

export class PortalApp {
  private requestSeq = 0;
  private pending: Promise<unknown> = Promise.resolve();
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly root: HTMLElement,
    readonly api: TollgateApi,
    private readonly options: AppOptions = {},
  ) {}

  start(): Promise<void> {
    const stored = window.sessionStorage.getItem("tollgate-session");
    if (stored) {
      const session = JSON.parse(stored);
      this.api.token = session.token;
      this.api.role = session.role;
      this.api.principal = session.principal;
    }
    window.addEventListener("hashchange", () => this.track(this.route()));
    const poll = this.options.pollMs ?? 15000;
    if (poll > 0) {
      this.pollTimer = setInterval(() => {
        if (window.location.hash === "#/home") this.track(this.route());
      }, poll);
    }
    return this.track(this.route());
  }

  stop(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
  }

  /** Test hook: resolves once every in-flight action has rendered. */
  async settle(): Promise<void> {
    let last;
    do {
      last = this.pending;
      await last.catch(() => undefined);
    } while (last !== this.pending);
  }

  async navigate(hash: string): Promise<void> {
    if (window.location.hash === hash) {
      await this.track(this.route());
      return;
    }
    const seqBefore = this.requestSeq;
    window.location.hash = hash;
    // hashchange dispatch may be asynchronous; give it a macrotask, then
    // route ourselves if nothing rendered yet
    await new Promise((resolve) => setTimeout(resolve, 0));
    await this.settle();
    if (this.requestSeq === seqBefore) await this.track(this.route());
  }

  private track(work: Promise<void>): Promise<void> {
    this.pending = this.pending.then(() => work, () => work);
    return work;
  }

  // -- routing ---------------------------------------------------------

  private async route(): Promise<void> {
    const seq = ++this.requestSeq;
    let hash = window.location.hash || "#/home";
    if (!this.api.token && !PUBLIC_PAGES.has(hash)) hash = "#/login";
    if (this.api.role === "user" && hash.startsWith("#/admin")) hash = "#/home";
    if (this.api.role === "admin" && !hash.startsWith("#/admin") && !PUBLIC_PAGES.has(hash)) {
      hash = "#/admin/users";
    }
    if (hash !== window.location.hash) {
      // guard redirect: keep the address bar honest (re-routes to the same target)
      window.location.hash = hash;
    }
    try {
      await this.renderPage(hash, seq, "");
    } catch (err) {
      if (isApiFailure(err)) {
        if (err.status === 401) {
          this.endSession();
          if (seq === this.requestSeq) this.show("#/login", views.loginPage(views.errorBanner(err)));
          return;
        }
        if (seq === this.requestSeq) this.show(hash, views.errorBanner(err));
        return;
      }
      throw err;
    }
  }

  private async renderPage(hash: string, seq: number, message: string): Promise<void> {
    const [page, body] = await this.buildPage(hash, message);
    if (seq !== this.requestSeq) return; // a newer navigation already rendered
    this.show(page, body);
  }

  private async buildPage(hash: string, message: string): Promise<[string, string]> {
    switch (hash) {
      case "#/login":
        return [hash, views.loginPage(message)];
      case "#/register":
        return [hash, views.registerPage(message)];
      case "#/recover":
        return [hash, views.recoverPage(message)];
      case "#/home":
        return [hash, views.notificationsPage(await this.api.notifications(), message)];
      case "#/transactions":
        return [hash, views.transactionsPage(await this.api.transactions(), message)];
      case "#/vehicles":
        return [hash, views.vehiclesPage(await this.api.vehicles(), message)];
      case "#/invoices":
        return [hash, views.invoicesPage(await this.api.invoices(), message)];
      case "#/account":
        return [hash, views.accountPage(await this.api.self(), message)];
      case "#/admin/users":
        return [hash, views.adminUsersPage(await this.api.adminUsers(), message)];
      case "#/admin/reports":
        return [hash, views.adminReportsPage(await this.api.adminReports(), message)];
      case "#/admin/track":
        return [hash, views.adminTrackPage(null, message)];
      default:
        return ["#/home", views.notificationsPage(await this.api.notifications(), message)];
    }
  }

  private show(hash: string, body: string): void {
    this.root.innerHTML = views.layout(this.api.role, hash, body);
    this.bind(hash);
  }

  private endSession(): void {
    this.api.logout();
    window.sessionStorage.removeItem("tollgate-session");
  }

  private saveSession(): void {
    window.sessionStorage.setItem("tollgate-session", JSON.stringify({
      token: this.api.token,
      role: this.api.role,
      principal: this.api.principal,
    }));
  }

  // -- actions ---------------------------------------------------------

  private value(selector: string): string {
    const input = this.root.querySelector<HTMLInputElement>(selector);
    return input ? input.value : "";
  }

  private onSubmit(id: string, handler: () => Promise<void>, refresh = true): void {
    const form = this.root.querySelector(`#${id}`);
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      this.track(this.action(handler, refresh));
    });
  }

  private onClick(selector: string, handler: (el: HTMLElement) => Promise<void>): void {
    for (const el of Array.from(this.root.querySelectorAll<HTMLElement>(selector))) {
      el.addEventListener("click", () => this.track(this.action(() => handler(el))));
    }
  }

  /** Run an action and re-render the current page (unless the handler already
   *  rendered its own view); API errors become banners on the current page. */
  private async action(handler: () => Promise<void>, refresh = true): Promise<void> {
    const seq = ++this.requestSeq;
    const hash = window.location.hash || "#/home";
    try {
      await handler();
      if (refresh) await this.renderPage(window.location.hash || "#/home", seq, "");
    } catch (err) {
      if (!isApiFailure(err)) throw err;
      if (err.status === 401) {
        this.endSession();
        if (seq === this.requestSeq) this.show("#/login", views.loginPage(views.errorBanner(err)));
        return;
      }
      if (seq === this.requestSeq) await this.renderPage(hash, seq, views.errorBanner(err));
    }
  }

  private bind(hash: string): void {
    this.root.querySelector("#logout")?.addEventListener("click", () => {
      this.endSession();
      this.track(this.navigateAfterAuthChange("#/login"));
    });

    switch (hash) {
      case "#/login":
        this.onSubmit("login-form", async () => {
          await this.api.login(this.value("[name=email]"), this.value("[name=password]"));
          this.saveSession();
          await this.navigateAfterAuthChange(
            this.api.role === "admin" ? "#/admin/users" : "#/home");
        }, false);
        break;
      case "#/register":
        this.onSubmit("register-form", async () => {
          await this.api.register(this.value("[name=email]"), this.value("[name=password]"));
          this.show("#/login", views.loginPage("<div class=\"ok\">Account created, log in.</div>"));
        }, false);
        break;
      case "#/recover":
        this.onSubmit("recover-form", async () => {
          await this.api.recover(this.value("#recover-form [name=email]"));
          this.show(hash, views.recoverPage("<div class=\"ok\">Recovery token queued.</div>"));
        }, false);
        this.onSubmit("recover-confirm-form", async () => {
          await this.api.recoverConfirm(
            this.value("#recover-confirm-form [name=token]"),
            this.value("#recover-confirm-form [name=new_password]"));
          this.show("#/login", views.loginPage("<div class=\"ok\">Password set, log in.</div>"));
        }, false);
        break;
      case "#/vehicles":
        this.onSubmit("vehicle-form", async () => {
          await this.api.registerVehicle(
            this.value("[name=plate]"), this.value("[name=tag_id]") || undefined);
        });
        this.onClick("button.report-loss", async (el) => {
          await this.api.reportLoss(el.dataset.id ?? "");
        });
        break;
      case "#/invoices":
        this.onClick("button.pay", async (el) => {
          await this.api.payInvoice(el.dataset.id ?? "");
        });
        break;
      case "#/account":
        this.onSubmit("email-form", async () => {
          await this.api.updateSelf(this.value("#email-form [name=email]"));
        });
        this.onSubmit("password-form", async () => {
          await this.api.changePassword(
            this.value("#password-form [name=old_password]"),
            this.value("#password-form [name=new_password]"));
        });
        this.onSubmit("payment-form", async () => {
          await this.api.addPaymentMethod(this.value("#payment-form [name=method]"));
        });
        break;
      case "#/admin/users":
        this.onClick("button.remove-user", async (el) => {
          await this.api.adminDeleteUser(el.dataset.id ?? "");
        });
        break;
      case "#/admin/reports":
        for (const form of Array.from(
          this.root.querySelectorAll<HTMLFormElement>("form.respond-form"))) {
          form.addEventListener("submit", (event) => {
            event.preventDefault();
            const response =
              form.querySelector<HTMLInputElement>("[name=response]")?.value ?? "";
            this.track(this.action(() =>
              this.api.adminRespond(form.dataset.id ?? "", response).then(() => undefined)));
          });
        }
        break;
      case "#/admin/track":
        this.onSubmit("track-form", async () => {
          const vehicle = await this.api.adminTrack(this.value("[name=vehicle_id]"));
          this.show(hash, views.adminTrackPage(vehicle));
        }, false);
        break;
    }
  }

  private async navigateAfterAuthChange(hash: string): Promise<void> {
    window.location.hash = hash;
    const seq = ++this.requestSeq;
    await this.renderPage(hash, seq, "");
  }
}
