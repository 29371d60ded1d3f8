from cardwright.cli import main

main()
