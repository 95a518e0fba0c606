#!/usr/bin/env python3
"""Writes fixtures/scenarios/*.json and fixtures/mock/*.json.

Golden outputs are computed here with plain Python arithmetic, independently
of the Rust adapter evaluator. The Rust tests then check that executing the
canned mappings reproduces these values.

Usage: python3 scripts/gen_fixtures.py [repo_root]
"""

import json
import sys
from datetime import datetime
from pathlib import Path

MPH_PER_KMH = 0.621371
FT_PER_M = 3.28084


def c_to_f(c):
    return c * 9 / 5 + 32


def kmh_to_mph(v):
    return v * MPH_PER_KMH


def m_to_ft(v):
    return v * FT_PER_M


def epoch(iso):
    return int(datetime.fromisoformat(iso.replace("Z", "+00:00")).timestamp())


def obj(props, required=None):
    return {
        "type": "object",
        "required": list(props) if required is None else required,
        "properties": props,
    }


def num(unit=None):
    node = {"type": "number"}
    if unit:
        node["x-unit"] = unit
    return node


INT = {"type": "integer"}
STR = {"type": "string"}
TS = {"type": "string", "format": "date-time"}


def arr(items):
    return {"type": "array", "items": items}


def mm(kind, src, tgt, detail=""):
    return {"source_path": src, "target_path": tgt, "kind": kind, "detail": detail}


def fm(src, tgt, transform="$", confidence=0.95):
    return {"source_path": src, "target_path": tgt, "transform": transform, "confidence": confidence}


def scenarios():
    out = []

    # 1. Weather API v1 -> v2
    src = obj({
        "city": STR,
        "temperature_celsius": num("celsius"),
        "humidity_percent": INT,
        "wind_speed_kmh": num("km/h"),
        "timestamp": TS,
    })
    tgt = obj({
        "location": obj({"name": STR}),
        "measurements": obj({
            "temp_f": num("fahrenheit"),
            "humidity": num(),
            "wind_mph": num("mph"),
        }),
        "recorded_at": INT,
    })
    data = {
        "city": "Amsterdam",
        "temperature_celsius": 18.5,
        "humidity_percent": 72,
        "wind_speed_kmh": 15.3,
        "timestamp": "2026-06-23T14:30:00Z",
    }
    golden = {
        "location": {"name": data["city"]},
        "measurements": {
            "temp_f": round(c_to_f(data["temperature_celsius"]), 2),
            "humidity": float(data["humidity_percent"]),
            "wind_mph": round(kmh_to_mph(data["wind_speed_kmh"]), 2),
        },
        "recorded_at": epoch(data["timestamp"]),
    }
    out.append(dict(
        id=1, name="weather_version", title="Weather version", protocol="rest", route="/api/weather",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("nesting_mismatch", "city", "location.name"),
            mm("unit_mismatch", "temperature_celsius", "measurements.temp_f"),
            mm("naming_mismatch", "humidity_percent", "measurements.humidity"),
            mm("unit_mismatch", "wind_speed_kmh", "measurements.wind_mph"),
            mm("type_mismatch", "timestamp", "recorded_at"),
        ],
        report=[
            mm("naming_mismatch", "city", "location.name", "city is the location name"),
            mm("unit_mismatch", "temperature_celsius", "measurements.temp_f", "celsius to fahrenheit"),
            mm("naming_mismatch", "humidity_percent", "measurements.humidity", "renamed"),
            mm("unit_mismatch", "wind_speed_kmh", "measurements.wind_mph", "km/h to mph"),
        ],
        mapping=[
            fm("city", "location.name"),
            fm("temperature_celsius", "measurements.temp_f", "celsius_to_fahrenheit($)"),
            fm("humidity_percent", "measurements.humidity", "to_float($)", 0.9),
            fm("wind_speed_kmh", "measurements.wind_mph", "kmh_to_mph($)", 0.9),
            fm("timestamp", "recorded_at", "iso8601_to_epoch($)"),
        ],
        notes="Nesting, unit, naming and type changes between two versions of one API. "
              "temp_f = 18.5*9/5+32 = 65.3; wind_mph = 15.3*0.621371 = 9.5069763, published as 9.51; "
              "humidity 72 -> 72.0; recorded_at = epoch(2026-06-23T14:30:00Z) = 1782225000.",
    ))

    # 2. IoT sensor -> analytics
    src = obj({"device_id": STR, "device_temp_c": num("celsius"), "altitude_m": num("m")})
    tgt = obj({"sensor_id": STR, "temp_f": num("fahrenheit"), "altitude_ft": num("ft")})
    data = {"device_id": "s1", "device_temp_c": 21.0, "altitude_m": 12.0}
    golden = {
        "sensor_id": data["device_id"],
        "temp_f": round(c_to_f(data["device_temp_c"]), 4),
        "altitude_ft": round(m_to_ft(data["altitude_m"]), 5),
    }
    out.append(dict(
        id=2, name="sensor_analytics", title="Sensor analytics", protocol="iot",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("naming_mismatch", "device_id", "sensor_id"),
            mm("unit_mismatch", "device_temp_c", "temp_f"),
            mm("unit_mismatch", "altitude_m", "altitude_ft"),
        ],
        report=[
            mm("naming_mismatch", "device_id", "sensor_id", "device is the sensor"),
            mm("unit_mismatch", "device_temp_c", "temp_f", "celsius to fahrenheit"),
            mm("unit_mismatch", "altitude_m", "altitude_ft", "metres to feet"),
        ],
        mapping=[
            fm("device_id", "sensor_id"),
            fm("device_temp_c", "temp_f", "celsius_to_fahrenheit($)"),
            fm("altitude_m", "altitude_ft", "m_to_ft($)", 0.9),
        ],
        notes="Telemetry in metric units consumed by an imperial analytics service. "
              "temp_f = 21.0*9/5+32 = 69.8; altitude_ft = 12.0*3.28084 = 39.37008.",
    ))

    # 3. Stock REST -> GraphQL
    src = obj({"ticker_symbol": STR, "last_price": num(), "trade_volume": INT, "market_cap": INT})
    tgt = obj({"tickerSymbol": STR, "lastPrice": num(), "tradeVolume": INT, "marketCap": INT})
    data = {"ticker_symbol": "ASML", "last_price": 712.4, "trade_volume": 1250000, "market_cap": 280500000000}
    golden = {"tickerSymbol": "ASML", "lastPrice": 712.4, "tradeVolume": 1250000, "marketCap": 280500000000}
    pairs = [("ticker_symbol", "tickerSymbol"), ("last_price", "lastPrice"),
             ("trade_volume", "tradeVolume"), ("market_cap", "marketCap")]
    out.append(dict(
        id=3, name="stock_casing", title="Stock casing", protocol="graphql", route="/graphql/quote",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[mm("naming_mismatch", s, t) for s, t in pairs],
        report=[mm("naming_mismatch", s, t, "snake_case to camelCase") for s, t in pairs],
        mapping=[fm(s, t, "$", 0.98) for s, t in pairs],
        notes="Field names change case convention only; values are copied unchanged.",
    ))

    # 4. Multi-sensor aggregation
    src = obj({
        "station_id": STR,
        "sensors": arr(obj({"sensor_id": STR, "temp_c": num("celsius")})),
    })
    tgt = obj({"station_id": STR, "mean_temp_c": num("celsius"), "sensor_ids": arr(STR)})
    temps = [21.0, 22.5, 20.0, 22.5]
    data = {
        "station_id": "north-3",
        "sensors": [{"sensor_id": f"t{i + 1}", "temp_c": t} for i, t in enumerate(temps)],
    }
    golden = {
        "station_id": "north-3",
        "mean_temp_c": sum(temps) / len(temps),
        "sensor_ids": [s["sensor_id"] for s in data["sensors"]],
    }
    out.append(dict(
        id=4, name="multi_sensor", title="Multi-sensor", protocol="iot",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("cardinality_mismatch", "sensors[].temp_c", "mean_temp_c"),
            mm("nesting_mismatch", "sensors[].sensor_id", "sensor_ids[]"),
        ],
        report=[
            mm("naming_mismatch", "sensors[].temp_c", "mean_temp_c", "mean over all sensors"),
            mm("naming_mismatch", "sensors[].sensor_id", "sensor_ids[]", "ids collected into a list"),
        ],
        mapping=[
            fm("station_id", "station_id", "$", 0.99),
            fm("sensors[].temp_c", "mean_temp_c", "mean($)", 0.85),
            fm("sensors[].sensor_id", "sensor_ids[]", "$", 0.85),
        ],
        notes="Per-sensor readings aggregated into one station summary (cardinality plus aggregate). "
              "mean_temp_c = (21.0+22.5+20.0+22.5)/4 = 21.5; sensor_ids collected in order.",
    ))

    # 5. Date format bridging
    src = obj({"event_id": STR, "created_at": TS, "updated_at": TS})
    tgt = obj({"event_id": STR, "created_at": INT, "updated_at": INT})
    data = {"event_id": "evt-9", "created_at": "2026-03-01T08:15:00Z", "updated_at": "2026-03-01T10:45:30+02:00"}
    golden = {"event_id": "evt-9", "created_at": epoch(data["created_at"]), "updated_at": epoch(data["updated_at"])}
    out.append(dict(
        id=5, name="date_bridging", title="Date bridging", protocol="rest",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("type_mismatch", "created_at", "created_at"),
            mm("type_mismatch", "updated_at", "updated_at"),
        ],
        report=[],
        mapping=[
            fm("event_id", "event_id", "$", 0.99),
            fm("created_at", "created_at", "iso8601_to_epoch($)"),
            fm("updated_at", "updated_at", "iso8601_to_epoch($)"),
        ],
        notes="ISO 8601 strings, one with an offset, become Unix seconds. "
              "2026-03-01T08:15:00Z = 1772352900; 2026-03-01T10:45:30+02:00 = 08:45:30Z = 1772354730.",
    ))

    # 6. Nested -> flat device log
    src = obj({
        "device": obj({"id": STR, "model": STR}),
        "entry": obj({"level": STR, "message": STR}),
    })
    tgt = obj({"device_id": STR, "device_model": STR, "log_level": STR, "log_message": STR})
    data = {"device": {"id": "gw-17", "model": "EdgeBox 2"}, "entry": {"level": "WARN", "message": "disk 91% full"}}
    golden = {"device_id": "gw-17", "device_model": "EdgeBox 2", "log_level": "WARN", "log_message": "disk 91% full"}
    flat = [("device.id", "device_id"), ("device.model", "device_model"),
            ("entry.level", "log_level"), ("entry.message", "log_message")]
    out.append(dict(
        id=6, name="nested_to_flat", title="Nested to flat", protocol="rest",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[mm("nesting_mismatch", s, t) for s, t in flat],
        report=[mm("naming_mismatch", s, t, "flattened") for s, t in flat if not t.startswith("device")],
        mapping=[fm(s, t, "$", 0.9) for s, t in flat],
        notes="Nested device log records flattened for a log store; values copied unchanged.",
    ))

    # 7. Metric normalization to OpenTelemetry names
    src = obj({"host": STR, "cpuUsage": num(), "memUsedBytes": INT, "reqCount": INT})
    tgt = obj({
        "host": obj({"name": STR}),
        "system": obj({"cpu": obj({"utilization": num()}), "memory": obj({"usage": INT})}),
        "http": obj({"server": obj({"request_count": INT})}),
    })
    data = {"host": "web-1", "cpuUsage": 0.73, "memUsedBytes": 512000000, "reqCount": 1520}
    golden = {
        "host": {"name": "web-1"},
        "system": {"cpu": {"utilization": 0.73}, "memory": {"usage": 512000000}},
        "http": {"server": {"request_count": 1520}},
    }
    otel = [("host", "host.name"), ("cpuUsage", "system.cpu.utilization"),
            ("memUsedBytes", "system.memory.usage"), ("reqCount", "http.server.request_count")]
    out.append(dict(
        id=7, name="metric_normalization", title="Metric normalization", protocol="iot",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[mm("naming_mismatch", s, t) for s, t in otel],
        report=[mm("naming_mismatch", s, t, "semantic convention name") for s, t in otel],
        mapping=[fm(s, t, "$", 0.9) for s, t in otel],
        notes="Ad hoc metric keys renamed to OpenTelemetry semantic conventions, with dotted names as nesting; values copied unchanged.",
    ))

    # 8. Missing optional fields
    src = obj({"user_id": INT, "email": STR, "nickname": STR, "legacy_flag": {"type": "boolean"}},
              required=["user_id", "email", "legacy_flag"])
    tgt = obj({"user_id": INT, "email": STR, "display_name": STR, "locale": STR},
              required=["user_id", "email"])
    data = {"user_id": 42, "email": "ana@example.org", "legacy_flag": True}
    golden = {"user_id": 42, "email": "ana@example.org"}
    out.append(dict(
        id=8, name="missing_fields", title="Missing fields", protocol="rest",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("naming_mismatch", "nickname", "display_name"),
            mm("field_missing", "legacy_flag", None),
            mm("field_extra", None, "locale"),
        ],
        report=[mm("naming_mismatch", "nickname", "display_name", "nickname is the display name")],
        mapping=[
            fm("user_id", "user_id", "$", 0.99),
            fm("email", "email", "$", 0.99),
            fm("nickname", "display_name", "$", 0.8),
        ],
        notes="Optional source field absent from the payload; extra and dropped fields on both sides. "
              "Golden keeps only user_id and email: nickname is absent and legacy_flag has no target.",
    ))

    # 9. Array <-> single value
    src = obj({"labels": arr(STR), "owner": STR})
    tgt = obj({"labels": STR, "owner": arr(STR)})
    data = {"labels": ["primary", "eu-west"], "owner": "ops"}
    golden = {"labels": data["labels"][0], "owner": [data["owner"]]}
    out.append(dict(
        id=9, name="array_single", title="Array single", protocol="graphql",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("cardinality_mismatch", "labels[]", "labels"),
            mm("cardinality_mismatch", "owner", "owner[]"),
        ],
        report=[],
        mapping=[
            fm("labels[]", "labels", "first($)", 0.9),
            fm("owner", "owner[]", "wrap_array($)", 0.9),
        ],
        notes="A list collapses to its first element (\"primary\") and a scalar is wrapped ([\"ops\"]).",
    ))

    # 10. Combined complex
    src = obj({
        "station": obj({"code": STR}),
        "readings": arr(obj({"temp_c": num("celsius"), "wind_kmh": num("km/h")})),
        "observedAt": TS,
        "status": {"type": "string", "enum": ["OK", "DEGRADED"]},
        "elevation_m": num("m"),
    })
    tgt = obj({
        "station_code": STR,
        "temperature_f": num("fahrenheit"),
        "wind_mph": num("mph"),
        "observed_at": INT,
        "status": {"type": "string", "enum": ["ok", "degraded"]},
        "elevation_ft": num("ft"),
    })
    data = {
        "station": {"code": "AMS-01"},
        "readings": [{"temp_c": 18.0, "wind_kmh": 20.0}, {"temp_c": 17.5, "wind_kmh": 22.0}],
        "observedAt": "2026-06-23T06:00:00+02:00",
        "status": "OK",
        "elevation_m": 10.0,
    }
    golden = {
        "station_code": "AMS-01",
        "temperature_f": round(c_to_f(data["readings"][0]["temp_c"]), 4),
        "wind_mph": round(kmh_to_mph(data["readings"][0]["wind_kmh"]), 5),
        "observed_at": epoch(data["observedAt"]),
        "status": data["status"].lower(),
        "elevation_ft": round(m_to_ft(data["elevation_m"]), 4),
    }
    out.append(dict(
        id=10, name="combined_complex", title="Combined complex", protocol="rest",
        source_schema=src, target_schema=tgt, input=data, golden=golden,
        expected=[
            mm("nesting_mismatch", "station.code", "station_code"),
            mm("unit_mismatch", "readings[].temp_c", "temperature_f"),
            mm("unit_mismatch", "readings[].wind_kmh", "wind_mph"),
            mm("type_mismatch", "observedAt", "observed_at"),
            mm("unit_mismatch", "elevation_m", "elevation_ft"),
        ],
        report=[
            mm("naming_mismatch", "station.code", "station_code", "flattened"),
            mm("unit_mismatch", "readings[].temp_c", "temperature_f", "first reading, celsius to fahrenheit"),
            mm("unit_mismatch", "readings[].wind_kmh", "wind_mph", "first reading, km/h to mph"),
            mm("naming_mismatch", "observedAt", "observed_at", "camelCase to snake_case"),
            mm("unit_mismatch", "elevation_m", "elevation_ft", "metres to feet"),
        ],
        mapping=[
            fm("station.code", "station_code", "$", 0.9),
            fm("readings[].temp_c", "temperature_f", "celsius_to_fahrenheit(first($))", 0.85),
            fm("readings[].wind_kmh", "wind_mph", "kmh_to_mph(first($))", 0.85),
            fm("observedAt", "observed_at", "iso8601_to_epoch($)", 0.9),
            fm("status", "status", "lower($)", 0.9),
            fm("elevation_m", "elevation_ft", "m_to_ft($)", 0.9),
        ],
        notes="Nesting, cardinality, units, types and value casing in one payload; the first reading is used. "
              "temperature_f = 18.0*9/5+32 = 64.4; wind_mph = 20.0*0.621371 = 12.42742; "
              "observed_at = epoch(2026-06-23T04:00:00Z) = 1782187200; elevation_ft = 10.0*3.28084 = 32.8084.",
    ))
    return out


def strip(expected):
    return [{k: v for k, v in m.items() if k != "detail" and v is not None} for m in expected]


def write(path, doc):
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent
    scen_dir, mock_dir = root / "fixtures" / "scenarios", root / "fixtures" / "mock"
    scen_dir.mkdir(parents=True, exist_ok=True)
    mock_dir.mkdir(parents=True, exist_ok=True)
    for s in scenarios():
        stem = f"{s['id']:02d}_{s['name']}"
        doc = {k: s[k] for k in ("id", "name", "title", "protocol")}
        if "route" in s:
            doc["route"] = s["route"]
        doc.update(
            source_schema=s["source_schema"],
            target_schema=s["target_schema"],
            input=s["input"],
            golden=s["golden"],
            expected_mismatches=strip(s["expected"]),
            notes=s["notes"],
        )
        write(scen_dir / f"{stem}.json", doc)
        report = [dict(m, severity="medium") for m in s["report"]]
        write(mock_dir / f"{stem}.json", {
            "source_schema": s["source_schema"],
            "target_schema": s["target_schema"],
            "mismatch_report": {"mismatches": report},
            "mapping": {"mappings": s["mapping"]},
        })
        print(stem, json.dumps(s["golden"]))


if __name__ == "__main__":
    main()
