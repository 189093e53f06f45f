// Command-line driver. Exit codes: 0 success, 1 validation error,
// 2 numerical failure, 3 I/O failure.

#include <iostream>
#include <string>
#include <vector>

#include "wsrpso/harness.hpp"

int main(int argc, char** argv) {
  using namespace wsrpso;
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const ExperimentSpec spec = parse_spec(args);
    if (spec.mode == Mode::convergence)
      run_convergence(spec, std::cerr);
    else
      run_sweep(spec, std::cerr);
    return 0;
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const ValidationError& e) {
    for (const auto& m : e.messages()) std::cerr << "error: " << m << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
