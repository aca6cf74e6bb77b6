def answer(Film1: str, Film2: str, DocumentaryType: str, Country: str) -> int:
    doc1 = retrieve(f"Is {Film1} a {DocumentaryType} film?", bool)
    doc2 = retrieve(f"Is {Film2} a {DocumentaryType} film?", bool)
    if doc1 and doc2:
        return 1
    return 0
