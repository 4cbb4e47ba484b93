def assert_dict_struct(data, structure):
    if isinstance(structure, dict):
        assert_is_instance(data, dict)
        for key, value in structure.items():
            assert key in data, f"missing key {key!r}"
            assert_dict_struct(data[key], value)
    elif isinstance(structure, list):
        assert_is_instance(data, list)
        for item in data:
            assert_dict_struct(item, structure[0])
    elif structure is float:
        # JSON renders integral floats like 0.0 as 0
        assert_is_instance(data, (int, float))
        assert not isinstance(data, bool), f"Expected a number, but got {data}"
    else:
        assert_is_instance(data, structure)


def assert_is_instance(data, structure):
    assert isinstance(data, structure), f"Expected {structure}, but got {data}"


def has_status(report: dict, status: str) -> bool:
    return report["status"] == status


def reports_named(reports: list, name: str) -> list:
    return [r for r in reports if r["check"] == name]


def all_graded_pass(reports: list) -> bool:
    return all(r["pass"] for r in reports if r["status"] in ("passed", "failed"))


def complex_of(pair) -> complex:
    return complex(pair[0], pair[1])


def vector_of(pairs) -> list:
    return [complex_of(p) for p in pairs]
