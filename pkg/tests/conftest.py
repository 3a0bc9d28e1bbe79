from __future__ import annotations

import pytest

from chatmock import ChatServer


@pytest.fixture
def chat_server():
    servers: list[ChatServer] = []

    def start(script, delay_s: float = 0.0) -> ChatServer:
        server = ChatServer(script, delay_s=delay_s).start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()
