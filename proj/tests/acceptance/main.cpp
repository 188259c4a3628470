#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "afrelay/mc/parallel.hpp"
#include "afrelay_tools/acceptance.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"afrelay acceptance checks"};
    afr::tools::AcceptanceOptions opts;
    std::string json_out;
    int threads = 0;
    app.add_flag("--quick", opts.quick, "Deterministic checks only");
    app.add_option("--seed", opts.seed, "Master seed")->capture_default_str();
    app.add_option("--only", opts.only, "Criterion ids to run");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--json", json_out, "Write a JSON report here");
    CLI11_PARSE(app, argc, argv);

    afr::set_default_threads(threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()));
    const auto results = afr::tools::run_acceptance(opts, [](const afr::tools::CriterionResult& r) {
        std::cout << afr::tools::format_line(r) << std::endl;
        for (const auto& d : r.details)
            std::cout << "    " << d << '\n';
    });
    int passed = 0;
    for (const auto& r : results)
        passed += r.passed;
    std::cout << (passed == static_cast<int>(results.size()) ? "PASSED " : "FAILED ") << passed << '/'
              << results.size() << std::endl;
    if (!json_out.empty())
        std::ofstream(json_out) << afr::tools::to_json(results, opts).dump(2) << '\n';
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}
