from illposed.expcli import main

main()
