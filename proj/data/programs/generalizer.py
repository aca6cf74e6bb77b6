def answer(Film1: str, Film2: str, DocumentaryType: str, Country: str) -> int:
    doc1 = retrieve(f"Is {Film1} a {DocumentaryType} film?", bool)
    doc2 = retrieve(f"Is {Film2} a {DocumentaryType} film?", bool)
    inv1 = retrieve(f"Does {Film1} involve {Country}?", bool)
    inv2 = retrieve(f"Does {Film2} involve {Country}?", bool)
    if doc1 and doc2 and inv1 and inv2:
        return 1
    return 0
