#include "riffle/chunking.hpp"

#include <cmath>

#include "riffle/error.hpp"

namespace riffle {

ChunkingSuggestion suggest_chunking_csr(std::uint64_t target_elements, double mean_nnz_per_row) {
    if (target_elements < 1)
        throw InvalidArgument("suggest_chunking: target_elements must be >= 1");
    if (mean_nnz_per_row <= 0.0)
        throw InvalidArgument("suggest_chunking: mean_nnz_per_row must be positive");
    const double rows = std::round(static_cast<double>(target_elements) / mean_nnz_per_row);
    ChunkingSuggestion s;
    s.chunk_rows = rows < 1.0 ? 1 : static_cast<std::uint64_t>(rows);
    return s;
}

ChunkingSuggestion suggest_chunking_dense(std::uint64_t target_elements, std::uint64_t n_var) {
    if (target_elements < 1)
        throw InvalidArgument("suggest_chunking: target_elements must be >= 1");
    if (n_var == 0) throw InvalidArgument("suggest_chunking: n_var must be >= 1");
    const double rows =
        std::round(static_cast<double>(target_elements) / static_cast<double>(n_var));
    ChunkingSuggestion s;
    s.chunk_rows = rows < 1.0 ? 1 : static_cast<std::uint64_t>(rows);
    return s;
}

}  // namespace riffle
