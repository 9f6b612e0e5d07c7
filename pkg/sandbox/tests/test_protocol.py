import pytest

from solver_sandbox.protocol import (
    ProtocolError,
    SandboxRequest,
    SandboxResponse,
    parse_request,
    parse_response,
)


EXAMPLE_REQUEST = SandboxRequest(
    v=[0.0, 1.0],
    content=[
        {"Contract": [0.1, 0.2], "Principal Utility": 0.5, "Agent Action": 1},
        {"Contract": [0.9, 0.9], "Principal Utility": 0.0, "Agent Action": -1},
    ],
)


class TestRequest:
    def test_round_trip(self):
        again = parse_request(EXAMPLE_REQUEST.to_json())
        assert again == EXAMPLE_REQUEST

    def test_missing_key_named(self):
        with pytest.raises(ProtocolError, match="Principal Utility"):
            parse_request(
                '{"v": [1.0], "content": [{"Contract": [0.1], "Agent Action": 1}]}'
            )

    def test_not_json(self):
        with pytest.raises(ProtocolError, match="JSON"):
            parse_request("{nope")

    def test_empty_valuations(self):
        with pytest.raises(ProtocolError, match="'v'"):
            parse_request('{"v": [], "content": []}')


class TestResponse:
    def test_success_round_trip(self):
        response = SandboxResponse(setting=[[0.5, 0.5, 0.1]])
        assert parse_response(response.to_json()) == response

    def test_error_round_trip(self):
        response = SandboxResponse.failure("timeout", "took too long")
        again = parse_response(response.to_json())
        assert again == response
        assert not again.ok

    def test_exactly_one_branch(self):
        with pytest.raises(ProtocolError, match="exactly one"):
            SandboxResponse(setting=[[1.0]], error_kind="crash")
        with pytest.raises(ProtocolError, match="exactly one"):
            SandboxResponse()

    def test_unknown_kind_rejected(self):
        with pytest.raises(ProtocolError, match="kind"):
            SandboxResponse.failure("mystery", "")

    def test_neither_branch_in_payload(self):
        with pytest.raises(ProtocolError, match="neither"):
            parse_response('{"other": 1}')
