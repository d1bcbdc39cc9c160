#include <iostream>

#include "fader/pipeline.h"

int main(int argc, char** argv) {
  return fader::pipeline::RunCli(argc, argv, std::cout, std::cerr);
}
