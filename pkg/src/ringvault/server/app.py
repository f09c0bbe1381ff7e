"""HTTP/JSON surface over RingVaultService.

Challenge failures and credential errors are uniform on the wire; the audit
log carries the detailed reasons. Timestamps in responses are Unix seconds.
"""

from __future__ import annotations

import base64
import binascii
from importlib import resources
from typing import List, Optional

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from ..classification import OutOfRange
from ..graphical import InvalidSelection
from ..otp import TransportFailure
from .config import ServerConfig
from .service import RingVaultService, ServiceError
from .store import StoredObject

_STATUS = {
    "WeakInput": 422,
    "OutOfRange": 422,
    "InvalidSelection": 422,
    "DuplicateUsername": 409,
    "BadCredentials": 401,
    "Unauthenticated": 401,
    "NotFound": 404,
    "NotOwner": 403,
    "ChallengeFailed": 403,
    "GrantInvalid": 403,
    "StorageFailure": 500,
    "TransportFailure": 502,
}

# wire messages are fixed per code so responses stay byte-identical across
# causes (anti-enumeration)
_MESSAGE = {
    "BadCredentials": "invalid credentials",
    "ChallengeFailed": "challenge failed",
    "GrantInvalid": "grant invalid",
}


class RegisterBody(BaseModel):
    username: str
    password: str
    email: str
    mobile: str
    graphical_selections: List[int]


class LoginBody(BaseModel):
    username: str
    password: str


class UploadBody(BaseModel):
    name: str
    payload_b64: str
    confidentiality: int
    integrity: int
    availability: int
    encrypted: bool = False


class AnswerBody(BaseModel):
    # OTP / password answers are strings; graphical answers are id triples
    answer: object = Field(...)


def _object_json(obj: StoredObject) -> dict:
    return {
        "object_id": obj.object_id,
        "name": obj.name,
        "cia": {"c": obj.cia.c, "i": obj.cia.i, "a": obj.cia.a},
        "ring": obj.ring.level,
        "encrypted": obj.encrypted,
        "size_bytes": obj.size_bytes,
        "created_at": obj.created_at,
    }


def create_app(config: Optional[ServerConfig] = None, clock=None,
               transport=None) -> FastAPI:
    config = config or ServerConfig()
    service = RingVaultService(config, clock=clock, transport=transport)
    app = FastAPI(title="ringvault", version="0.1.0")
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        status = _STATUS.get(exc.code, 400)
        message = _MESSAGE.get(exc.code, str(exc))
        return JSONResponse(status_code=status,
                            content={"error": exc.code, "message": message})

    @app.exception_handler(OutOfRange)
    async def out_of_range_handler(request: Request, exc: OutOfRange):
        return JSONResponse(status_code=422,
                            content={"error": "OutOfRange", "message": str(exc)})

    @app.exception_handler(InvalidSelection)
    async def invalid_selection_handler(request: Request, exc: InvalidSelection):
        return JSONResponse(status_code=422,
                            content={"error": "InvalidSelection", "message": str(exc)})

    @app.exception_handler(TransportFailure)
    async def transport_failure_handler(request: Request, exc: TransportFailure):
        return JSONResponse(status_code=502,
                            content={"error": "TransportFailure",
                                     "message": "could not dispatch code"})

    def _account(authorization: Optional[str]):
        token = None
        if authorization and authorization.startswith("Bearer "):
            token = authorization[len("Bearer "):]
        return service.authenticate(token)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/register", status_code=201)
    def register(body: RegisterBody):
        account = service.register(body.username, body.password, body.email,
                                   body.mobile, body.graphical_selections)
        return {"user_id": account.user_id, "username": account.username}

    @app.post("/login")
    def login(body: LoginBody):
        token = service.login(body.username, body.password)
        return {"token": token}

    @app.post("/objects", status_code=201)
    def upload(body: UploadBody, authorization: Optional[str] = Header(None)):
        account = _account(authorization)
        try:
            payload = base64.b64decode(body.payload_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=422, detail="payload_b64 is not valid base64")
        obj = service.upload(account, body.name, payload, body.confidentiality,
                             body.integrity, body.availability, body.encrypted)
        return _object_json(obj)

    @app.get("/objects")
    def list_objects(authorization: Optional[str] = Header(None)):
        account = _account(authorization)
        return {"objects": [_object_json(o) for o in service.list_objects(account)]}

    @app.post("/objects/{object_id}/access-request")
    def access_request(object_id: str, authorization: Optional[str] = Header(None)):
        account = _account(authorization)
        pending = service.request_download(account, object_id)
        out = {
            "kind": pending.kind,
            "challenge_id": pending.challenge_id,
            "issued_at": pending.issued_at,
            "ttl_seconds": pending.ttl_seconds,
        }
        if pending.kind == "graphical":
            out["presented_sets"] = pending.presented_sets
        return out

    @app.post("/challenges/{challenge_id}/answer")
    def answer_challenge(challenge_id: str, body: AnswerBody,
                         authorization: Optional[str] = Header(None)):
        account = _account(authorization)
        grant = service.complete_challenge(account, challenge_id, body.answer)
        return {"grant_id": grant.grant_id, "issued_at": grant.issued_at,
                "ttl_seconds": grant.ttl_seconds}

    @app.get("/download/{grant_id}")
    def download(grant_id: str, authorization: Optional[str] = Header(None)):
        account = _account(authorization)
        payload, obj = service.download(account, grant_id)
        headers = {
            "X-Object-Id": obj.object_id,
            "X-Object-Name": obj.name,
            "X-Object-Ring": str(obj.ring.level),
            "X-Object-Encrypted": "1" if obj.encrypted else "0",
        }
        return Response(content=payload, media_type="application/octet-stream",
                        headers=headers)

    @app.get("/catalog")
    def catalog():
        return service.catalog.to_manifest()

    if config.ui_dir is not None:
        ui_dir = config.ui_dir.resolve()

        @app.get("/")
        def ui_index():
            return Response(content=(ui_dir / "index.html").read_bytes(),
                            media_type="text/html")

        @app.get("/ui/{path:path}")
        def ui_file(path: str):
            target = (ui_dir / path).resolve()
            if not str(target).startswith(str(ui_dir)) or not target.is_file():
                raise HTTPException(status_code=404, detail="no such file")
            media = "application/javascript" if target.suffix == ".js" else \
                "text/css" if target.suffix == ".css" else "application/octet-stream"
            return Response(content=target.read_bytes(), media_type=media)

    @app.get("/assets/{path:path}")
    def assets(path: str):
        entry = None
        for s in service.catalog.sets:
            for e in s:
                if e.asset_ref == path:
                    entry = e
        if entry is None:
            raise HTTPException(status_code=404, detail="no such asset")
        data = resources.files("ringvault").joinpath("data", path).read_bytes()
        return Response(content=data, media_type="image/png")

    return app
