// Command-line driver for the WAIT library.  Talks to the shared library
// exclusively through the C API in wait.h.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wait.h"

namespace {

constexpr const char* kUsage =
    "usage: waitcli <command> [options]\n"
    "\n"
    "commands:\n"
    "  exp1 .. exp10        run one experiment, write CSV + summary.json\n"
    "  all                  run every experiment\n"
    "  profile              evaluate log W(x) for one schedule\n"
    "  budget               partial capital budget of one schedule\n"
    "  simulate             simulate running-max paths to CSV\n"
    "  table                print the schedule table\n"
    "\n"
    "options:\n"
    "  --config FILE        key=value config file (flags override it)\n"
    "  --out DIR            output directory (default: results)\n"
    "  --seed N             master seed\n"
    "  --paths N            path count override\n"
    "  --horizon N          horizon override\n"
    "  --batch N            simulation batch size (default 5000)\n"
    "  --scale X            shrink default path counts by X for quick runs\n"
    "  --threads N          worker threads (0 = hardware)\n"
    "  --eta X              positivity mix (default 1e-12)\n"
    "  --schedule KEY       schedule key (profile/budget), e.g. wdyadic, power:0.5\n"
    "  --x X                evaluation point for 'profile'\n"
    "  --x-max X            profile range for 'profile' (default: x + 1)\n"
    "  --K N                truncation index for 'budget' (default 200000)\n"
    "  --mu X               Gaussian mean for 'simulate' (default 1)\n"
    "  --null / --alt       hypothesis for 'simulate' (default null)\n"
    "\n"
    "exit status: 0 ok, 1 assertion/run failure, 2 usage error\n";

int usage_error(const std::string& message) {
    std::fprintf(stderr, "waitcli: %s\n\n%s", message.c_str(), kUsage);
    return 2;
}

int api_error(wait_status status) {
    std::fprintf(stderr, "waitcli: %s\n", wait_last_error());
    return status == WAIT_ERR_INVALID_ARGUMENT ? 2 : 1;
}

struct Options {
    std::map<std::string, std::string> config;  // forwarded as key=value text
    std::string out_dir = "results";
    std::optional<std::string> schedule;
    std::optional<double> x;
    std::optional<double> x_max;
    std::int64_t budget_k = 200000;
};

std::string config_text(const Options& opt) {
    std::ostringstream out;
    for (const auto& [k, v] : opt.config) out << k << "=" << v << "\n";
    return out.str();
}

bool parse_args(int argc, char** argv, Options& opt, std::string& error) {
    // config file first, so explicit flags override its values
    for (int i = 2; i < argc; ++i) {
        if (std::strcmp(argv[i], "--config") == 0) {
            if (i + 1 >= argc) {
                error = "--config needs a file path";
                return false;
            }
            std::ifstream in(argv[i + 1]);
            if (!in) {
                error = std::string("cannot open config file ") + argv[i + 1];
                return false;
            }
            std::string line;
            while (std::getline(in, line)) {
                const auto hash = line.find('#');
                if (hash != std::string::npos) line.erase(hash);
                const auto a = line.find_first_not_of(" \t\r");
                if (a == std::string::npos) continue;
                const auto b = line.find_last_not_of(" \t\r");
                line = line.substr(a, b - a + 1);
                const auto eq = line.find('=');
                if (eq == std::string::npos) {
                    error = "config line is not key=value: '" + line + "'";
                    return false;
                }
                opt.config[line.substr(0, eq)] = line.substr(eq + 1);
            }
        }
    }

    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        auto value = [&](const char* name) -> const char* {
            if (i + 1 >= argc) {
                error = std::string(name) + " needs a value";
                return nullptr;
            }
            return argv[++i];
        };
        if (arg == "--config") {
            ++i;  // consumed above
        } else if (arg == "--out") {
            const char* v = value("--out");
            if (!v) return false;
            opt.out_dir = v;
        } else if (arg == "--seed" || arg == "--paths" || arg == "--horizon" ||
                   arg == "--batch" || arg == "--scale" || arg == "--threads" ||
                   arg == "--eta" || arg == "--mu") {
            const char* v = value(arg.c_str());
            if (!v) return false;
            opt.config[arg.substr(2)] = v;
        } else if (arg == "--null") {
            opt.config["hypothesis"] = "null";
        } else if (arg == "--alt") {
            opt.config["hypothesis"] = "alternative";
        } else if (arg == "--schedule") {
            const char* v = value("--schedule");
            if (!v) return false;
            opt.schedule = v;
        } else if (arg == "--x") {
            const char* v = value("--x");
            if (!v) return false;
            opt.x = std::atof(v);
        } else if (arg == "--x-max") {
            const char* v = value("--x-max");
            if (!v) return false;
            opt.x_max = std::atof(v);
        } else if (arg == "--K") {
            const char* v = value("--K");
            if (!v) return false;
            opt.budget_k = std::atoll(v);
        } else {
            error = "unknown flag '" + arg + "'";
            return false;
        }
    }
    return true;
}

int run_experiments(const std::string& command, const Options& opt) {
    const std::string cfg = config_text(opt);
    char* summary = nullptr;
    wait_status status;
    if (command == "all") {
        status = wait_experiment_run_all(cfg.c_str(), opt.out_dir.c_str(), &summary);
    } else {
        const int id = std::atoi(command.c_str() + 3);
        status = wait_experiment_run(id, cfg.c_str(), opt.out_dir.c_str(), &summary);
    }
    if (summary) {
        std::fputs(summary, stdout);
        wait_string_free(summary);
    }
    if (status == WAIT_OK) return 0;
    if (status == WAIT_ERR_ASSERTION_FAILED) {
        std::fprintf(stderr, "waitcli: %s\n", wait_last_error());
        return 1;
    }
    return api_error(status);
}

int run_profile(const Options& opt) {
    if (!opt.schedule) return usage_error("profile needs --schedule");
    if (!opt.x) return usage_error("profile needs --x");
    wait_schedule* schedule = nullptr;
    wait_status status = wait_schedule_create(opt.schedule->c_str(), &schedule);
    if (status != WAIT_OK) return api_error(status);
    const double x = *opt.x;
    const double x_max = opt.x_max ? *opt.x_max : x + 1.0;
    wait_profile* profile = nullptr;
    status = wait_profile_build(schedule, x_max, &profile);
    if (status != WAIT_OK) {
        wait_schedule_free(schedule);
        return api_error(status);
    }
    double log_w = 0.0;
    status = wait_profile_log_weight_sum(profile, x, &log_w);
    if (status != WAIT_OK) {
        wait_profile_free(profile);
        wait_schedule_free(schedule);
        return api_error(status);
    }
    double slack = 0.0;
    wait_profile_envelope_slack(profile, x, &slack);
    std::printf("schedule = %s\n", opt.schedule->c_str());
    std::printf("x = %.12g\n", x);
    std::printf("log_W = %.12g\n", log_w);
    std::printf("W = %.12g\n", std::exp(log_w));
    double exponent = 0.0;
    if (wait_profile_exponent(profile, x, &exponent) == WAIT_OK)
        std::printf("exponent = %.12g\n", exponent);
    else
        std::printf("exponent = undefined (W = 0)\n");
    std::printf("envelope_slack = %.12g\n", slack);
    wait_profile_free(profile);
    wait_schedule_free(schedule);
    return 0;
}

int run_budget(const Options& opt) {
    if (!opt.schedule) return usage_error("budget needs --schedule");
    wait_schedule* schedule = nullptr;
    wait_status status = wait_schedule_create(opt.schedule->c_str(), &schedule);
    if (status != WAIT_OK) return api_error(status);
    double budget = 0.0;
    status = wait_schedule_partial_budget(schedule, opt.budget_k, &budget);
    wait_schedule_free(schedule);
    if (status != WAIT_OK) return api_error(status);
    std::printf("schedule = %s\n", opt.schedule->c_str());
    std::printf("K = %lld\n", static_cast<long long>(opt.budget_k));
    std::printf("partial_budget = %.12g\n", budget);
    return 0;
}

int run_simulate(const Options& opt) {
    const std::string cfg = config_text(opt);
    char* summary = nullptr;
    const wait_status status = wait_simulate_run(cfg.c_str(), opt.out_dir.c_str(), &summary);
    if (summary) {
        std::fputs(summary, stdout);
        wait_string_free(summary);
    }
    return status == WAIT_OK ? 0 : api_error(status);
}

int run_table() {
    char* text = nullptr;
    const wait_status status = wait_schedule_table(&text);
    if (status != WAIT_OK) return api_error(status);
    std::fputs(text, stdout);
    wait_string_free(text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage_error("missing command");
    const std::string command = argv[1];

    bool known = command == "all" || command == "profile" || command == "budget" ||
                 command == "simulate" || command == "table";
    if (command.rfind("exp", 0) == 0 && command.size() > 3) {
        const int id = std::atoi(command.c_str() + 3);
        known = known || (id >= 1 && id <= 10 && command == "exp" + std::to_string(id));
    }
    if (!known) return usage_error("unknown command '" + command + "'");

    Options opt;
    std::string error;
    if (!parse_args(argc, argv, opt, error)) return usage_error(error);

    if (command == "table") return run_table();
    if (command == "profile") return run_profile(opt);
    if (command == "budget") return run_budget(opt);
    if (command == "simulate") return run_simulate(opt);
    return run_experiments(command, opt);
}
