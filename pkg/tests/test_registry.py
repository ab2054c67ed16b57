import json

import pytest

from mistyagents.registry import (
    RegistryError,
    bundled_registry_path,
    load_registry,
)


def _bundled_doc():
    return json.loads(bundled_registry_path().read_text(encoding="utf-8"))


def test_bundled_registry_loads_all_definitions(registry):
    # 24 APIs from the representative subset plus the heard-event handler.
    assert len(registry) == 25
    assert "change_led" in registry
    assert "on_heard" in registry


def test_duplicate_name_rejected():
    doc = _bundled_doc()
    doc["apis"].append(dict(doc["apis"][0]))
    with pytest.raises(RegistryError, match="duplicate API name"):
        load_registry(doc)


def test_bad_example_call_rejected():
    doc = _bundled_doc()
    for api in doc["apis"]:
        if api["name"] == "move_head":
            api["example_call"] = "move_head(0, 0, 45, 800, 99)"
    with pytest.raises(RegistryError, match="move_head"):
        load_registry(doc)


def test_unparseable_document():
    with pytest.raises(RegistryError, match="not valid JSON"):
        load_registry("{nope")


def test_enum_requires_values():
    doc = {"apis": [{"name": "x", "domain": "core", "params": [{"name": "p", "kind": "enum"}]}]}
    with pytest.raises(RegistryError, match="enum"):
        load_registry(doc)


def test_default_must_satisfy_range():
    doc = {
        "apis": [
            {
                "name": "x",
                "domain": "core",
                "params": [
                    {"name": "p", "kind": "int", "range": [0, 10], "required": False, "default": 99}
                ],
            }
        ]
    }
    with pytest.raises(RegistryError, match="default"):
        load_registry(doc)


def test_domain_subset_action(registry):
    sub = registry.domain_subset("action")
    for name in ("move_head", "move_arms", "speak", "display_expression", "change_led", "set_speech_rate"):
        assert name in sub
    assert "wait" in sub and "log" in sub  # core rides along
    assert "on_touch" not in sub


def test_domain_subset_touch(registry):
    sub = registry.domain_subset("touch")
    assert "on_touch" in sub
    assert "wait" in sub
    assert "speak" not in sub


def test_domain_subset_empty_registry():
    empty = load_registry({"apis": []})
    assert len(empty.domain_subset("action")) == 0


def test_domain_subset_idempotent(registry):
    for domain in ("action", "touch", "audiovisual", "core"):
        once = registry.domain_subset(domain)
        twice = once.domain_subset(domain)
        assert once == twice
        assert all(a.domain in (domain, "core") for a in once.apis)


def test_document_round_trip(registry):
    reloaded = load_registry(registry.to_document())
    assert reloaded == registry


def test_render_docs_deterministic(registry):
    assert registry.render_docs() == registry.render_docs()


def test_render_docs_single_api():
    reg = load_registry(
        {
            "apis": [
                {
                    "name": "wave",
                    "domain": "action",
                    "params": [],
                    "returns": "none",
                    "example_call": "",
                }
            ]
        }
    )
    text = reg.render_docs()
    assert text.count("wave()") == 1


def test_render_docs_golden_signature(registry):
    assert "change_led(red: int [0,255], green: int [0,255], blue: int [0,255])" in registry.render_docs()
