"""Live session host: wall-clock stepping, telemetry frames, operator commands.

One stepping context owns the simulation exclusively; network clients only
exchange messages with it (inbound command queue, outbound broadcast).
Commands take effect at integration step boundaries so the switching
signal stays piecewise constant, and a mode command that would make the
controller singular is refused — the session flags it and pauses instead
of crashing.

Wire format: one JSON document per websocket text message, versioned with
a ``v`` field.  See README for the field-by-field schema.
"""

from __future__ import annotations

import asyncio
import json
import time
from collections import deque
from dataclasses import asdict, dataclass
from pathlib import Path

from .engine import LogRow, NoiseState, ScenarioStepper, SwitchSchedule
from .flc import GainSet, SingularInteractionMatrix, check_mode
from .mecanum import ExtendedState
from .references import ReferenceTrajectory, circle_reference, line_reference

PROTOCOL_VERSION = 1
DEFAULT_BROADCAST_HZ = 30.0
COMMAND_KINDS = ("set_sigma", "set_reference", "pause", "resume", "reset")
REFERENCE_NAMES = ("circle", "line")


class MalformedMessage(ValueError):
    """Inbound message failed to parse or validate; connection is kept."""


@dataclass(frozen=True)
class TelemetryFrame:
    t: float
    x: float
    y: float
    theta: float    # wrapped
    v1: float
    v2: float
    u1: float       # applied (post-noise)
    u2: float
    u3: float
    sigma: int
    e1x: float
    e1y: float
    e2: float
    e3: float
    power: float
    energy: float
    det: float
    singular_flag: bool = False

    @classmethod
    def from_row(cls, row: LogRow, singular: bool) -> "TelemetryFrame":
        return cls(t=row.t, x=row.x, y=row.y, theta=row.theta, v1=row.v1, v2=row.v2,
                   u1=row.u1, u2=row.u2, u3=row.u3, sigma=row.sigma,
                   e1x=row.e1x, e1y=row.e1y, e2=row.e2, e3=row.e3,
                   power=row.power, energy=row.energy, det=row.det,
                   singular_flag=singular)


@dataclass(frozen=True)
class OperatorCommand:
    kind: str
    sigma: int | None = None
    reference: str | None = None
    s0: tuple | None = None
    issued_at: float | None = None

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise MalformedMessage(f"unknown command kind {self.kind!r}")
        if self.kind == "set_sigma":
            try:
                object.__setattr__(self, "sigma", check_mode(self.sigma))
            except (TypeError, ValueError):
                raise MalformedMessage(f"set_sigma needs sigma in {{0, 1}}, got {self.sigma!r}") from None
        if self.kind == "set_reference" and self.reference not in REFERENCE_NAMES:
            raise MalformedMessage(f"set_reference needs one of {REFERENCE_NAMES}, got {self.reference!r}")
        if self.kind == "reset":
            if self.s0 is None or len(self.s0) != 5:
                raise MalformedMessage("reset needs a 5-entry initial state")
            object.__setattr__(self, "s0", tuple(float(v) for v in self.s0))


def encode_frame(frame: TelemetryFrame) -> str:
    doc = {"v": PROTOCOL_VERSION, "type": "frame"}
    doc.update(asdict(frame))
    return json.dumps(doc)


def decode_frame(text: str) -> TelemetryFrame:
    doc = _parse(text, expected="frame")
    try:
        fields = {k: doc[k] for k in TelemetryFrame.__dataclass_fields__}
        return TelemetryFrame(**{**fields, "sigma": check_mode(fields["sigma"]),
                                 "singular_flag": bool(fields["singular_flag"])})
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedMessage(f"bad frame: {err}") from None


def encode_command(cmd: OperatorCommand) -> str:
    doc = {"v": PROTOCOL_VERSION, "type": "command"}
    doc.update({k: v for k, v in asdict(cmd).items() if v is not None})
    if cmd.s0 is not None:
        doc["s0"] = list(cmd.s0)
    return json.dumps(doc)


def decode_command(text: str) -> OperatorCommand:
    doc = _parse(text, expected="command")
    kwargs = {k: doc.get(k) for k in ("kind", "sigma", "reference", "s0", "issued_at")}
    if kwargs["s0"] is not None:
        if not isinstance(kwargs["s0"], (list, tuple)):
            raise MalformedMessage("s0 must be an array")
        kwargs["s0"] = tuple(kwargs["s0"])
    if kwargs["kind"] is None:
        raise MalformedMessage("command is missing 'kind'")
    return OperatorCommand(**kwargs)


def _parse(text: str, expected: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise MalformedMessage(f"invalid JSON: {err.msg}") from None
    if not isinstance(doc, dict):
        raise MalformedMessage("message must be a JSON object")
    if doc.get("v") != PROTOCOL_VERSION:
        raise MalformedMessage(f"unsupported protocol version {doc.get('v')!r}")
    if doc.get("type") != expected:
        raise MalformedMessage(f"expected a {expected} message, got {doc.get('type')!r}")
    return doc


class LiveSession:
    """Owns one simulation and applies operator commands at step boundaries.

    ``advance(wall_dt)`` consumes wall-clock time, integrates the matching
    number of fixed steps and returns the telemetry frames that came due
    at the broadcast cadence.  With ``record=True`` every log row is kept
    so a finished session can be compared against a batch replay of its
    command log.
    """

    def __init__(self, reference: ReferenceTrajectory, gains: GainSet, s0: ExtendedState,
                 dt: float = 1e-3, sigma: int = 1, noise: NoiseState | None = None,
                 broadcast_hz: float = DEFAULT_BROADCAST_HZ, record: bool = False,
                 singularity_tol: float = 1e-6):
        self.stepper = ScenarioStepper(reference, gains, s0, dt, noise=noise,
                                       singularity_tol=singularity_tol)
        self.sigma = check_mode(sigma)
        self._initial = (s0, sigma)
        self.paused = False
        self.singular_paused = False
        self.broadcast_interval = 1.0 / broadcast_hz
        self.record = record
        self.rows: list[LogRow] = []
        self.command_log: list[tuple[float, int]] = [(0.0, self.sigma)]
        self._queue: deque[OperatorCommand] = deque()
        self._events: list[dict] = []
        self._carry = 0.0
        self._next_emit = 0.0

    # -- operator side ----------------------------------------------------

    def submit(self, cmd: OperatorCommand) -> None:
        self._queue.append(cmd)

    def drain_events(self) -> list[dict]:
        out, self._events = self._events, []
        return out

    @property
    def status(self) -> str:
        if self.singular_paused:
            return "singular-paused"
        return "paused" if self.paused else "running"

    # -- stepping ---------------------------------------------------------

    def _ack(self, cmd: OperatorCommand, applied: bool, reason: str = "") -> None:
        self._events.append({"v": PROTOCOL_VERSION, "type": "ack", "kind": cmd.kind,
                             "applied": applied, "reason": reason, "t": self.stepper.t})

    def _apply_pending(self) -> None:
        while self._queue:
            cmd = self._queue.popleft()
            if cmd.kind == "pause":
                self.paused = True
                self._ack(cmd, True)
            elif cmd.kind == "resume":
                self.paused = False
                self.singular_paused = False
                self._ack(cmd, True)
            elif cmd.kind == "reset":
                s0 = ExtendedState(*cmd.s0)
                noise = self.stepper.noise
                if noise is not None:
                    noise = NoiseState(k=noise.k, q=noise.q, rng_seed=noise.rng_seed)
                self.stepper.reset(s0, noise)
                self.sigma = self._initial[1]
                self.command_log = [(0.0, self.sigma)]
                self.rows = []
                self._carry = 0.0
                self._next_emit = 0.0
                self.singular_paused = False
                self._ack(cmd, True)
            elif cmd.kind == "set_reference":
                self.stepper.reference = circle_reference(8.0, 0.15) if cmd.reference == "circle" \
                    else line_reference()
                self._ack(cmd, True)
            elif cmd.kind == "set_sigma":
                if cmd.sigma == self.sigma:
                    self._ack(cmd, True, "already in that mode")
                elif self.stepper.would_be_singular(cmd.sigma):
                    self.singular_paused = True
                    self._ack(cmd, False,
                              "refused: controller singular in that mode at the current state "
                              "(sagittal speed too small)")
                else:
                    self.sigma = cmd.sigma
                    t = self.stepper.t
                    if self.command_log and self.command_log[-1][0] == t:
                        self.command_log[-1] = (t, self.sigma)
                    else:
                        self.command_log.append((t, self.sigma))
                    self._ack(cmd, True)

    def _frame(self) -> TelemetryFrame:
        return TelemetryFrame.from_row(self.stepper.snapshot(self.sigma), self.singular_paused)

    def advance(self, wall_dt: float) -> list[TelemetryFrame]:
        if wall_dt < 0.0:
            raise ValueError("wall_dt cannot be negative")
        frames: list[TelemetryFrame] = []
        dt = self.stepper.dt
        self._carry += wall_dt
        n = int(self._carry / dt)
        self._carry -= n * dt
        for _ in range(n):
            self._apply_pending()
            if self.paused or self.singular_paused:
                break
            try:
                row = self.stepper.step(self.sigma)
            except SingularInteractionMatrix:
                self.singular_paused = True
                self._events.append({"v": PROTOCOL_VERSION, "type": "ack", "kind": "singularity",
                                     "applied": False, "reason": "controller became singular",
                                     "t": self.stepper.t})
                break
            if self.record:
                self.rows.append(row)
            while self.stepper.t >= self._next_emit - 1e-12:
                frames.append(self._frame())
                self._next_emit += self.broadcast_interval
        else:
            # no break: drain anything left so pause/resume work between steps
            self._apply_pending()
        if not frames and (self.paused or self.singular_paused) and wall_dt > 0.0:
            frames.append(self._frame())
        return frames

    def replay_schedule(self) -> SwitchSchedule:
        """Applied mode commands as a batch schedule (the replay contract)."""
        return SwitchSchedule(tuple(self.command_log))


def session_step(session: LiveSession, wall_dt: float) -> list[TelemetryFrame]:
    """Advance a live session by one wall-clock slice; see LiveSession.advance."""
    return session.advance(wall_dt)


# -- network layer ---------------------------------------------------------

def build_app(session: LiveSession, ui_dir: str | None = None):
    from aiohttp import WSMsgType, web

    app = web.Application()
    app["session"] = session
    app["clients"] = set()

    async def health(request):
        return web.json_response({"v": PROTOCOL_VERSION, "status": session.status,
                                  "t": session.stepper.t, "sigma": session.sigma,
                                  "clients": len(app["clients"])})

    async def ws_handler(request):
        ws = web.WebSocketResponse(heartbeat=30.0)
        await ws.prepare(request)
        queue: asyncio.Queue = asyncio.Queue(maxsize=64)
        app["clients"].add(queue)

        async def sender():
            while True:
                payload = await queue.get()
                await ws.send_str(payload)

        send_task = asyncio.create_task(sender())
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                try:
                    session.submit(decode_command(msg.data))
                except MalformedMessage as err:
                    await ws.send_str(json.dumps({"v": PROTOCOL_VERSION, "type": "error",
                                                  "reason": str(err)}))
        finally:
            send_task.cancel()
            app["clients"].discard(queue)
        return ws

    app.router.add_get("/health", health)
    app.router.add_get("/ws", ws_handler)
    if ui_dir is not None:
        ui = Path(ui_dir)

        async def index(request):
            return web.FileResponse(ui / "index.html")

        app.router.add_get("/", index)
        app.router.add_static("/", ui)

    async def pump(app):
        interval = session.broadcast_interval
        last = time.monotonic()
        task_clients = app["clients"]
        try:
            while True:
                await asyncio.sleep(interval)
                now = time.monotonic()
                frames = session.advance(now - last)
                last = now
                payloads = [encode_frame(f) for f in frames]
                payloads += [json.dumps(e) for e in session.drain_events()]
                for queue in list(task_clients):
                    for payload in payloads:
                        try:
                            queue.put_nowait(payload)
                        except asyncio.QueueFull:
                            break  # lagging client: drop, never block the loop
        except asyncio.CancelledError:
            pass

    async def start_pump(app):
        app["pump"] = asyncio.create_task(pump(app))

    async def stop_pump(app):
        app["pump"].cancel()

    app.on_startup.append(start_pump)
    app.on_cleanup.append(stop_pump)
    return app


async def serve_async(session: LiveSession, port: int, ui_dir: str | None = None,
                      host: str = "127.0.0.1"):
    from aiohttp import web

    app = build_app(session, ui_dir)
    runner = web.AppRunner(app)
    await runner.setup()
    site = web.TCPSite(runner, host, port)
    await site.start()
    return runner


def serve_forever(session: LiveSession, port: int, ui_dir: str | None = None,
                  host: str = "127.0.0.1") -> None:
    async def _main():
        runner = await serve_async(session, port, ui_dir, host)
        print(f"telemetry bridge on http://{host}:{port} (ws at /ws, health at /health)")
        try:
            while True:
                await asyncio.sleep(3600)
        finally:
            await runner.cleanup()

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
