def answer(Film1: str, Film2: str, DocumentaryType: str, Country: str) -> int:
    return 1
