#pragma once

#include <vector>

namespace atsm {

/// Deterministic parallel reduction: the index range is split into a fixed
/// number of chunks independent of the thread count, chunk results are
/// combined in chunk order.  Output is bit-identical for any OMP_NUM_THREADS.
///
/// ChunkFn: Acc(int begin, int end); CombineFn: void(Acc& into, const Acc&).
template <class Acc, class ChunkFn, class CombineFn>
Acc chunked_reduce(int n, int chunks, ChunkFn per_chunk, CombineFn combine) {
    if (n <= 0) return Acc{};
    if (chunks > n) chunks = n;
    if (chunks < 1) chunks = 1;
    std::vector<Acc> partial(static_cast<size_t>(chunks));
#pragma omp parallel for schedule(static)
    for (int c = 0; c < chunks; ++c) {
        const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
        const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
        partial[static_cast<size_t>(c)] = per_chunk(begin, end);
    }
    Acc total = std::move(partial[0]);
    for (int c = 1; c < chunks; ++c) combine(total, partial[static_cast<size_t>(c)]);
    return total;
}

/// Worker cap honoring the AFFINE_GMM_THREADS environment variable.
int worker_count();

} // namespace atsm
