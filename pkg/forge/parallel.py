from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, threads=1):
    """Map ``fn`` over ``items`` on up to ``threads`` workers; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
