// Pure render functions: API data in, HTML string out. Amounts and states are
// printed exactly as the server sent them; the client never computes money.

import type {
  ApiFailure,
  InvoiceView,
  NotificationView,
  OwnerView,
  ReportsPage,
  TransactionView,
  VehicleView,
} from "./api.js";

export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function errorBanner(failure: ApiFailure): string {
  return `<div class="error" data-status="${failure.status}">` +
    `${failure.status || "network"}: ${esc(failure.message)}</div>`;
}

export function layout(role: string | null, active: string, body: string): string {
  const userLinks = [
    ["#/home", "Notifications"],
    ["#/vehicles", "Vehicles"],
    ["#/invoices", "Invoices"],
    ["#/transactions", "Transactions"],
    ["#/account", "Account"],
  ];
  const adminLinks = [
    ["#/admin/users", "Users"],
    ["#/admin/reports", "Reports"],
    ["#/admin/track", "Track vehicle"],
  ];
  const links = role === "admin" ? adminLinks : role === "user" ? userLinks : [];
  const nav = links
    .map(([href, label]) =>
      `<a href="${href}" class="${href === active ? "active" : ""}">${label}</a>`)
    .join(" ");
  return `<header><h1>tollgate</h1><nav>${nav}</nav>` +
    (role ? `<button id="logout">Sign out</button>` : "") +
    `</header><main>${body}</main>`;
}

export function loginPage(message = ""): string {
  return `<h2>Login</h2>${message}
<form id="login-form">
  <label>Email <input name="email" type="email" required></label>
  <label>Password <input name="password" type="password" required></label>
  <button type="submit">Login</button>
</form>
<p><a href="#/register">Create an account</a> · <a href="#/recover">Recover password</a></p>`;
}

export function registerPage(message = ""): string {
  return `<h2>Registration</h2>${message}
<form id="register-form">
  <label>Email <input name="email" type="email" required></label>
  <label>Password <input name="password" type="password" required></label>
  <button type="submit">Register</button>
</form>
<p><a href="#/login">Back to login</a></p>`;
}

export function recoverPage(message = ""): string {
  return `<h2>Recover password</h2>${message}
<form id="recover-form">
  <label>Email <input name="email" type="email" required></label>
  <button type="submit">Send recovery token</button>
</form>
<form id="recover-confirm-form">
  <label>Token <input name="token" required></label>
  <label>New password <input name="new_password" type="password" required></label>
  <button type="submit">Set new password</button>
</form>
<p><a href="#/login">Back to login</a></p>`;
}

export function notificationsPage(items: NotificationView[], message = ""): string {
  const rows = items
    .map((n) => `<tr data-id="${esc(n.notif_id)}"><td>${esc(n.kind)}</td>` +
      `<td>${esc(n.body)}</td><td>${esc(n.state)}</td></tr>`)
    .join("");
  return `<h2>Notifications</h2>${message}
<table id="notifications"><thead><tr><th>kind</th><th>message</th><th>state</th></tr></thead>
<tbody>${rows || '<tr><td colspan="3">No notifications yet.</td></tr>'}</tbody></table>`;
}

export function transactionsPage(items: TransactionView[], message = ""): string {
  const rows = items
    .map((t) => `<tr data-id="${esc(t.tx_id)}"><td>${esc(t.tx_id)}</td><td>${esc(t.kind)}</td>` +
      `<td>${esc(t.amount)}</td><td>${esc(t.plaza_id)}</td><td>${esc(t.timestamp)}</td></tr>`)
    .join("");
  return `<h2>Recent transactions</h2>${message}
<table id="transactions"><thead>
<tr><th>id</th><th>kind</th><th>amount</th><th>plaza</th><th>tick</th></tr>
</thead><tbody>${rows || '<tr><td colspan="5">No transactions yet.</td></tr>'}</tbody></table>`;
}

export function vehiclesPage(items: VehicleView[], message = ""): string {
  const rows = items
    .map((v) => {
      const seen = v.last_seen
        ? `${esc(v.last_seen.plaza_id)} @ ${esc(v.last_seen.timestamp)}`
        : "never";
      const action = v.status === "normal"
        ? `<button class="report-loss" data-id="${esc(v.vehicle_id)}">Report loss</button>`
        : esc(v.status);
      return `<tr data-id="${esc(v.vehicle_id)}"><td>${esc(v.display)}</td>` +
        `<td>${v.tag ? esc(v.tag.tag_id) : "—"}</td><td>${esc(v.status)}</td>` +
        `<td>${seen}</td><td>${action}</td></tr>`;
    })
    .join("");
  return `<h2>Vehicles</h2>${message}
<table id="vehicles"><thead>
<tr><th>plate</th><th>tag</th><th>status</th><th>last seen</th><th></th></tr>
</thead><tbody>${rows || '<tr><td colspan="5">No vehicles registered.</td></tr>'}</tbody></table>
<form id="vehicle-form">
  <label>Plate <input name="plate" required></label>
  <label>RFID tag (optional) <input name="tag_id"></label>
  <button type="submit">Register vehicle</button>
</form>`;
}

export function invoicesPage(items: InvoiceView[], message = ""): string {
  const rows = items
    .map((i) => {
      const pay = i.state === "open"
        ? `<button class="pay" data-id="${esc(i.invoice_id)}">Pay</button>`
        : "";
      return `<tr data-id="${esc(i.invoice_id)}"><td>${esc(i.invoice_id)}</td>` +
        `<td>${esc(i.plate)}</td><td>${esc(i.amount)}</td><td>${esc(i.deadline)}</td>` +
        `<td>${esc(i.state)}</td><td>${pay}</td></tr>`;
    })
    .join("");
  return `<h2>Invoices</h2>${message}
<table id="invoices"><thead>
<tr><th>id</th><th>plate</th><th>amount</th><th>deadline</th><th>state</th><th></th></tr>
</thead><tbody>${rows || '<tr><td colspan="6">No invoices.</td></tr>'}</tbody></table>`;
}

export function accountPage(owner: OwnerView, message = ""): string {
  const methods = owner.payment_methods.map((m) => `<li>${esc(m)}</li>`).join("");
  return `<h2>Account</h2>${message}
<p>Signed in as <span id="account-email">${esc(owner.email)}</span>,
balance <span id="account-balance">${esc(owner.balance)}</span> units.</p>
<form id="email-form">
  <label>Email <input name="email" value="${esc(owner.email)}" required></label>
  <button type="submit">Update email</button>
</form>
<form id="password-form">
  <label>Old password <input name="old_password" type="password" required></label>
  <label>New password <input name="new_password" type="password" required></label>
  <button type="submit">Change password</button>
</form>
<h3>Payment methods</h3>
<ul id="payment-methods">${methods || "<li>None on file.</li>"}</ul>
<form id="payment-form">
  <label>Add method <input name="method" required></label>
  <button type="submit">Add</button>
</form>`;
}

export function adminUsersPage(users: OwnerView[], message = ""): string {
  const rows = users
    .map((u) => `<tr data-id="${esc(u.owner_id)}"><td>${esc(u.owner_id)}</td>` +
      `<td>${esc(u.email)}</td><td>${esc(u.balance)}</td>` +
      `<td><button class="remove-user" data-id="${esc(u.owner_id)}">Remove</button></td></tr>`)
    .join("");
  return `<h2>Users</h2>${message}
<table id="admin-users"><thead>
<tr><th>id</th><th>email</th><th>balance</th><th></th></tr>
</thead><tbody>${rows || '<tr><td colspan="4">No users.</td></tr>'}</tbody></table>`;
}

export function adminReportsPage(page: ReportsPage, message = ""): string {
  const rows = page.reports
    .map((r) => {
      const respond = r.state === "open"
        ? `<form class="respond-form" data-id="${esc(r.report_id)}">` +
          `<input name="response" placeholder="response" required>` +
          `<button type="submit">Respond</button></form>`
        : esc(r.admin_response ?? "");
      return `<tr data-id="${esc(r.report_id)}"><td>${esc(r.report_id)}</td>` +
        `<td>${esc(r.vehicle_id)}</td><td>${esc(r.state)}</td><td>${respond}</td></tr>`;
    })
    .join("");
  return `<h2>Theft reports</h2>${message}
<p>Total reports: <span id="report-total">${esc(page.total)}</span></p>
<table id="admin-reports"><thead>
<tr><th>id</th><th>vehicle</th><th>state</th><th>response</th></tr>
</thead><tbody>${rows || '<tr><td colspan="4">No reports.</td></tr>'}</tbody></table>`;
}

export function adminTrackPage(vehicle: VehicleView | null, message = ""): string {
  let detail = "";
  if (vehicle) {
    const seen = vehicle.last_seen
      ? `${esc(vehicle.last_seen.plaza_id)} @ tick ${esc(vehicle.last_seen.timestamp)}`
      : "never seen";
    const alerts = (vehicle.alerts ?? [])
      .map((a) => `<li>${esc(a.plaza_id)} @ tick ${esc(a.timestamp)} (${esc(a.alert_id)})</li>`)
      .join("");
    detail = `<div id="track-result">
<p>Vehicle <b>${esc(vehicle.vehicle_id)}</b>, plate ${esc(vehicle.display)},
status ${esc(vehicle.status)}, last seen ${seen}.</p>
<h3>Alert history</h3><ul id="alert-history">${alerts || "<li>No alerts.</li>"}</ul></div>`;
  }
  return `<h2>Track vehicle</h2>${message}
<form id="track-form">
  <label>Vehicle id <input name="vehicle_id" required></label>
  <button type="submit">Track</button>
</form>${detail}`;
}
