#include <iostream>
#include <string>
#include <vector>

#include "ckfnet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const ckfnet::Command cmd = ckfnet::parse_args(args);
        return ckfnet::run(cmd);
    } catch (const ckfnet::CliHelp& help) {
        std::cout << help.what();
        return 0;
    } catch (const ckfnet::CliUsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
}
