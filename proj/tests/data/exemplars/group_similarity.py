from typing import Any, List

def answer(Group1: str) -> int:
    elements = retrieve(
        f"List the elements in {Group1} of the periodic table", list
    )
    valence_counts = []
    for el in elements:
        count = retrieve(
            f"How many valence electrons does {el} have?", int
        )
        valence_counts.append(count)
    if len(set(valence_counts)) == 1:
        return 1
    water_reactivities = []
    for el in elements:
        reactive = retrieve(
            f"Is {el} reactive with water?", bool
        )
        water_reactivities.append(reactive)
    if len(set(water_reactivities)) == 1:
        return 0
    return 0
