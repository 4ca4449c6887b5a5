"""HTTP face of the service: JSON over `/api/`, errors as `{code, message}`.

User routes need a bearer session token, admin routes an admin session, plaza
routes the pre-shared key for the plaza named in the body.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from tollgate.service.core import ApiError, ServiceCore, Session


class RegisterBody(BaseModel):
    email: str
    password: str


class LoginBody(BaseModel):
    email: str
    password: str


class ChangePasswordBody(BaseModel):
    old_password: str
    new_password: str


class RecoverBody(BaseModel):
    email: str


class RecoverConfirmBody(BaseModel):
    token: str
    new_password: str


class UpdateSelfBody(BaseModel):
    email: Optional[str] = None


class PaymentMethodBody(BaseModel):
    method: str


class VehicleBody(BaseModel):
    plate: str
    tag_id: Optional[str] = None
    tag_active: bool = True


class AdminUserPatchBody(BaseModel):
    email: Optional[str] = None
    balance: Optional[int] = None


class RespondBody(BaseModel):
    response: str


class ReadingWire(BaseModel):
    image_id: str
    raw_text: str
    filtered_text: str
    mean_char_score: float
    box: list[int]
    score: float


class PlazaEventBody(BaseModel):
    plaza_id: str
    seq: int
    timestamp: int
    tag_read: Optional[str] = None
    camera_pgm_b64: Optional[str] = None
    reading: Optional[ReadingWire] = None


class SweepBody(BaseModel):
    now: int


def create_app(core: ServiceCore) -> FastAPI:
    app = FastAPI(title="tollgate central service", docs_url=None, redoc_url=None)
    # the web portal is served from a different origin; auth is bearer-token
    # based (no cookies), so a wildcard origin is safe. Authorization must be
    # listed explicitly: the header wildcard does not cover it.
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["Authorization", "Content-Type", "X-Plaza-Key"])

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "malformed_body", "message": str(exc.errors())})

    def session(authorization: Optional[str] = Header(default=None)) -> Session:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[len("bearer "):]
        return core.authenticate(token)

    def user_session(sess: Session = Depends(session)) -> Session:
        core.require_role(sess, "user")
        return sess

    def admin_session(sess: Session = Depends(session)) -> Session:
        core.require_role(sess, "admin")
        return sess

    def plaza_auth(plaza_id: str, key: Optional[str]) -> None:
        expected = core.config.plaza_keys.get(plaza_id)
        if expected is None or key != expected:
            raise ApiError(401, "bad_plaza_key", f"bad key for plaza {plaza_id!r}")

    # -- public ---------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok", "tick": core.clock.now()}

    @app.post("/api/users", status_code=201)
    def register(body: RegisterBody):
        owner = core.register_owner(body.email, body.password)
        return core.owner_view(owner.owner_id)

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        sess = core.login(body.email, body.password)
        return {"token": sess.token, "principal": sess.principal, "role": sess.role}

    @app.post("/api/auth/recover", status_code=202)
    def recover(body: RecoverBody):
        core.request_recovery(body.email)
        return {"status": "queued"}

    @app.post("/api/auth/recover/confirm")
    def recover_confirm(body: RecoverConfirmBody):
        core.confirm_recovery(body.token, body.new_password)
        return {"status": "ok"}

    # -- user ---------------------------------------------------------------

    @app.post("/api/auth/change-password")
    def change_password(body: ChangePasswordBody, sess: Session = Depends(user_session)):
        core.change_password(sess.principal, body.old_password, body.new_password)
        return {"status": "ok"}

    @app.get("/api/users/self")
    def get_self(sess: Session = Depends(user_session)):
        return core.owner_view(sess.principal)

    @app.patch("/api/users/self")
    def update_self(body: UpdateSelfBody, sess: Session = Depends(user_session)):
        core.update_owner(sess.principal, email=body.email)
        return core.owner_view(sess.principal)

    @app.get("/api/notifications")
    def notifications(sess: Session = Depends(user_session)):
        return core.notifications_view(sess.principal)

    @app.post("/api/payment-methods", status_code=201)
    def add_payment_method(body: PaymentMethodBody, sess: Session = Depends(user_session)):
        core.add_payment_method(sess.principal, body.method)
        return core.owner_view(sess.principal)

    @app.get("/api/transactions")
    def transactions(limit: int = Query(default=20, ge=1, le=1000),
                     sess: Session = Depends(user_session)):
        return core.transactions_view(sess.principal, limit)

    @app.get("/api/vehicles")
    def vehicles(sess: Session = Depends(user_session)):
        return core.vehicles_view(sess.principal)

    @app.post("/api/vehicles", status_code=201)
    def register_vehicle(body: VehicleBody, sess: Session = Depends(user_session)):
        vehicle = core.register_vehicle(sess.principal, body.plate, body.tag_id, body.tag_active)
        return core.track_vehicle_view(vehicle.vehicle_id)

    @app.post("/api/vehicles/{vehicle_id}/report-loss", status_code=201)
    def report_loss(vehicle_id: str, sess: Session = Depends(user_session)):
        report = core.report_loss(sess.principal, vehicle_id)
        return {"report_id": report.report_id, "vehicle_id": report.vehicle_id,
                "state": report.state.value, "reported_at": report.reported_at}

    @app.get("/api/invoices")
    def invoices(sess: Session = Depends(user_session)):
        return core.invoices_view(sess.principal)

    @app.post("/api/invoices/{invoice_id}/pay")
    def pay_invoice(invoice_id: str, sess: Session = Depends(user_session)):
        tx = core.pay_invoice(sess.principal, invoice_id)
        return {"tx_id": tx.tx_id, "amount": tx.amount, "kind": tx.kind.value,
                "timestamp": tx.timestamp}

    # -- admin ---------------------------------------------------------------

    @app.get("/api/admin/users")
    def admin_users(_sess: Session = Depends(admin_session)):
        return core.admin_users_view()

    @app.patch("/api/admin/users/{owner_id}")
    def admin_patch_user(owner_id: str, body: AdminUserPatchBody,
                         _sess: Session = Depends(admin_session)):
        core.update_owner(owner_id, email=body.email, balance=body.balance)
        return core.owner_view(owner_id)

    @app.delete("/api/admin/users/{owner_id}", status_code=204)
    def admin_delete_user(owner_id: str, _sess: Session = Depends(admin_session)):
        core.delete_owner(owner_id)

    @app.get("/api/admin/reports")
    def admin_reports(_sess: Session = Depends(admin_session)):
        return core.admin_reports_view()

    @app.post("/api/admin/reports/{report_id}/respond")
    def admin_respond(report_id: str, body: RespondBody,
                      _sess: Session = Depends(admin_session)):
        report = core.respond_report(report_id, body.response)
        return {"report_id": report.report_id, "state": report.state.value,
                "admin_response": report.admin_response}

    @app.get("/api/admin/vehicles/{vehicle_id}/track")
    def admin_track(vehicle_id: str, _sess: Session = Depends(admin_session)):
        return core.track_vehicle_view(vehicle_id)

    # -- plaza ---------------------------------------------------------------

    @app.post("/api/plaza/events")
    def plaza_event(body: PlazaEventBody,
                    x_plaza_key: Optional[str] = Header(default=None)):
        plaza_auth(body.plaza_id, x_plaza_key)
        wire = body.model_dump()
        return core.ingest_passage(wire)

    @app.post("/api/plaza/sweep")
    def plaza_sweep(body: SweepBody, x_plaza_key: Optional[str] = Header(default=None)):
        if not core.config.plaza_keys or x_plaza_key not in core.config.plaza_keys.values():
            raise ApiError(401, "bad_plaza_key", "sweep requires a valid plaza key")
        fines = core.sweep(body.now)
        return {"fines": [{"tx_id": t.tx_id, "owner_id": t.owner_id, "amount": t.amount}
                          for t in fines]}

    return app


def serve(config_path: str) -> None:
    """Blocking entry point used by the CLI `serve` command.

    With a data_dir configured, queued notifications drain to
    `<data_dir>/outbox/` in the background every couple of seconds.
    """
    import asyncio

    import uvicorn

    from tollgate.service.config import ServiceConfig
    from tollgate.service.outbox import FileTransport

    config = ServiceConfig.from_file(config_path)
    core = ServiceCore(config)
    app = create_app(core)

    if config.data_dir is not None:
        transport = FileTransport(f"{config.data_dir}/outbox")

        async def drain_loop() -> None:
            while True:
                await asyncio.sleep(2.0)
                core.drain_outbox(transport)

        @app.on_event("startup")
        async def start_drain() -> None:
            asyncio.create_task(drain_loop())

    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
