#include <iostream>

#include "acceptance.hpp"

int main() {
  using namespace ptonet::tools;
  AcceptanceOptions options;
  options.seed = seed_from_env(options.seed);
  const auto rows = run_acceptance(options, std::cerr);
  int failures = 0;
  for (const auto& row : rows) {
    std::cout << format_row(row) << '\n';
    if (row.status != RowStatus::kPass) ++failures;
  }
  if (failures == 0) std::cout << "all acceptance criteria passed\n";
  else std::cout << failures << " acceptance criteria did not pass\n";
  return failures == 0 ? 0 : 1;
}
