#include "urbanmas/cli/app.hpp"

int main(int argc, char** argv) {
  urbanmas::cli::Services services;
  return urbanmas::cli::run_cli({argv + 1, argv + argc}, services);
}
